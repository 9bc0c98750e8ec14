import itertools

import numpy as np
import pytest

from conftest import random_params
from mrf_changepoint.core import GroupLabels, MRFError, SymmetricParams
from mrf_changepoint.evaluation import (
    adjacency,
    changepoint_stats,
    edge_confusion,
    edge_sign_proportions,
    eigenvector_centrality,
    estimate_kappa_mc,
    local_clustering,
    network_stats,
    relative_error,
)
from mrf_changepoint.pseudolikelihood import phi_rows
from mrf_changepoint.simulate import (
    SamplerOptions,
    community_labels,
    community_pair,
    CommunityLayout,
    exact_distribution,
    random_network,
)


def _from_edges(p, edges, w=1.0):
    theta = SymmetricParams.zeros(p)
    for j, k in edges:
        theta = theta.with_entry(j, k, w)
    return theta


def test_confusion_trivial_cases():
    truth = random_network(10, 0.3, seed=0)
    c = edge_confusion(truth, truth)
    assert c.sensitivity == 1 and c.specificity == 1
    c = edge_confusion(SymmetricParams.zeros(10), truth)
    assert c.sensitivity == 0 and c.specificity == 1
    full = random_network(4, 1.0, seed=0)
    assert edge_confusion(full, full).specificity is None


def test_confusion_bruteforce_and_swap():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a = random_network(10, rng.uniform(0.1, 0.6), rng)
        b = random_network(10, rng.uniform(0.1, 0.6), rng)
        A, B = a.dense(), b.dense()
        tp = fp = tn = fn = 0
        for j in range(10):
            for k in range(j):
                t, h = A[j, k] != 0, B[j, k] != 0
                tp += t and h
                fp += h and not t
                tn += not t and not h
                fn += t and not h
        c = edge_confusion(b, a)
        assert (c.tp, c.fp, c.tn, c.fn) == (tp, fp, tn, fn)
        s = edge_confusion(a, b)
        assert (s.tp, s.fp, s.fn, s.tn) == (c.tp, c.fn, c.fp, c.tn)
        assert s.sensitivity == pytest.approx(c.tp / (c.tp + c.fp))


def test_confusion_zero_tol():
    truth = _from_edges(3, [(1, 0)])
    hat = truth.with_entry(2, 0, 1e-9)
    assert edge_confusion(hat, truth).fp == 1
    assert edge_confusion(hat, truth, zero_tol=1e-6).fp == 0


def test_relative_error_examples():
    t = random_params(np.random.default_rng(2), 5)
    assert relative_error(t, t) == 0
    assert relative_error(SymmetricParams.zeros(5), t) == pytest.approx(1.0)
    assert relative_error(t.scaled(2), t) == pytest.approx(1.0)
    assert relative_error(t.scaled(1.1), t) > 0
    with pytest.raises(MRFError):
        relative_error(t, SymmetricParams.zeros(5))


def test_changepoint_stats_examples():
    r = changepoint_stats([350] * 5, 350)
    assert r.rmse == 0 and r.cv == 0
    assert changepoint_stats([340, 360], 350).rmse == pytest.approx(10.0)
    assert changepoint_stats([300], 350).cv == 0
    r = changepoint_stats([340, 360], 350)
    assert r.cv == pytest.approx(10 / 350)


def _triangles_bruteforce(A):
    p = len(A)
    tri = np.zeros(p)
    for a, b, c in itertools.combinations(range(p), 3):
        if A[a, b] and A[b, c] and A[a, c]:
            tri[[a, b, c]] += 1
    return tri


def test_clustering_hand_graph():
    theta = _from_edges(6, [(1, 0), (2, 0), (2, 1), (3, 2), (4, 3), (5, 3), (5, 4)])
    A = adjacency(theta)
    assert np.array_equal(_triangles_bruteforce(A), [1, 1, 1, 1, 1, 1])
    assert np.allclose(local_clustering(A), [1, 1, 1 / 3, 1 / 3, 1, 1])


def test_clustering_matches_bruteforce_random():
    rng = np.random.default_rng(3)
    for _ in range(10):
        A = adjacency(random_network(9, 0.4, rng))
        deg = A.sum(1)
        wedges = deg * (deg - 1) / 2
        expect = np.divide(_triangles_bruteforce(A), wedges, out=np.zeros(9), where=wedges > 0)
        assert np.allclose(local_clustering(A), expect)


def test_empty_and_complete_graphs():
    g = GroupLabels(("a",) * 4)
    (s,) = network_stats(SymmetricParams.zeros(4), g)
    assert (s.avg_degree, s.avg_centrality, s.avg_clustering) == (0, 0, 0)
    (s,) = network_stats(_from_edges(4, itertools.combinations(range(4), 2)), g)
    assert s.avg_clustering == 1 and s.avg_degree == 3 and s.avg_centrality == pytest.approx(1)


def test_centrality_star():
    c = eigenvector_centrality(adjacency(_from_edges(5, [(1, 0), (2, 0), (3, 0), (4, 0)])))
    assert c[0] == pytest.approx(1.0)
    assert np.allclose(c[1:], 1 / 2, atol=1e-8)   # leading eigenvalue 2 of the 4-leaf star


def test_disjoint_union_stats():
    rng = np.random.default_rng(4)
    a = random_network(5, 0.6, rng).dense()
    b = random_network(4, 0.7, rng).dense()
    W = np.zeros((9, 9))
    W[:5, :5], W[5:, 5:] = a, b
    union = network_stats(SymmetricParams.from_dense(W), GroupLabels(("x",) * 5 + ("y",) * 4))
    sa, = network_stats(SymmetricParams.from_dense(a), GroupLabels(("x",) * 5))
    sb, = network_stats(SymmetricParams.from_dense(b), GroupLabels(("y",) * 4))
    for got, ref in zip(union, (sa, sb)):
        assert got.avg_degree == pytest.approx(ref.avg_degree)
        assert got.avg_clustering == pytest.approx(ref.avg_clustering)
        assert got.avg_centrality == pytest.approx(ref.avg_centrality)


def test_sign_proportions():
    g = GroupLabels(("a", "a", "a", "b", "b"))
    props = edge_sign_proportions(_from_edges(5, [(1, 0), (2, 1)]), g)
    assert props["blocks"]["a"]["positive"] == 1
    assert props["blocks"]["b"]["positive"] == 0 and props["blocks"]["a|b"]["negative"] == 0
    pre, _ = community_pair(seed=1)
    labels = GroupLabels(community_labels(CommunityLayout()))
    props = edge_sign_proportions(pre, labels)
    assert props["total_edges"] == 123
    assert props["blocks"]["group1|group2"]["negative"] == pytest.approx(10 / 123)
    assert props["blocks"]["group1"]["negative"] == 0
    flipped = edge_sign_proportions(pre.scaled(-1), labels)
    for key, cell in props["blocks"].items():
        assert flipped["blocks"][key]["positive"] == cell["negative"]
        assert flipped["blocks"][key]["negative"] == cell["positive"]
    assert edge_sign_proportions(SymmetricParams.zeros(5), g)["empty"]


def test_kappa_identical_is_zero(ising):
    theta = random_network(4, 0.5, seed=2)
    k = estimate_kappa_mc(ising, theta, theta, 500, seed=0, sampler=SamplerOptions(50, 1))
    assert k.kappa == 0.0 and k.std_error == 0.0


def test_kappa_matches_exact(ising):
    rng = np.random.default_rng(5)
    t1, t2 = random_params(rng, 3, 1.0), random_params(rng, 3, 1.0)
    k = estimate_kappa_mc(ising, t1, t2, 20000, seed=1)
    s, p2 = exact_distribution(ising, t2)
    _, p1 = exact_distribution(ising, t1)
    fwd = float(p2 @ (phi_rows(ising, t1, s) - phi_rows(ising, t2, s)))
    bwd = float(p1 @ (phi_rows(ising, t2, s) - phi_rows(ising, t1, s)))
    assert abs(k.forward - fwd) <= 3 * k.forward_se
    assert abs(k.backward - bwd) <= 3 * k.backward_se
    assert k.kappa == min(k.forward, k.backward)


def test_kappa_strong_signal_positive(ising):
    t1 = random_network(6, 0.5, seed=3).scaled(2.0)
    t2 = t1.scaled(-1.0)
    k = estimate_kappa_mc(ising, t1, t2, 2000, seed=2, sampler=SamplerOptions(200, 2))
    assert k.kappa > 3 * k.std_error
