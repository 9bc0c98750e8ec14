import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_params
from mrf_changepoint.core import Dataset, ModelSpec, MRFError, SymmetricParams
from mrf_changepoint.pseudolikelihood import (
    node_conditional,
    phi,
    phi_gradient,
    phi_rows,
    segment_objective,
)
from mrf_changepoint.simulate import exact_distribution


def phi_oracle(spec, W, x):
    """Direct evaluation with the potential callables, no tables."""
    p = len(x)
    sym = spec.alphabet
    total = 0.0
    for j in range(p):
        logits = []
        for u in sym:
            s = W[j][j] * spec.b0(u)
            for k in range(p):
                if k != j:
                    s += W[j][k] * spec.b(u, sym[x[k]])
            logits.append(s)
        m = max(logits)
        lse = m + math.log(sum(math.exp(v - m) for v in logits))
        total += lse - logits[x[j]]
    return total


def test_zero_theta_uniform_conditional(ising):
    theta = SymmetricParams.zeros(3)
    assert np.allclose(node_conditional(ising, theta, [1, 0, 1], 1), [0.5, 0.5])
    assert phi(ising, theta, [1, 0, 1]) == pytest.approx(3 * math.log(2), abs=1e-14)


@pytest.mark.parametrize("t", [-3.0, -0.2, 0.0, 1.7])
def test_single_node_closed_forms(ising, t):
    theta = SymmetricParams(1, [t])
    pr = node_conditional(ising, theta, [0], 0)
    assert pr[1] == pytest.approx(math.exp(t) / (1 + math.exp(t)), rel=1e-14)
    assert phi(ising, theta, [1]) == pytest.approx(math.log1p(math.exp(-t)), rel=1e-13)


def test_conditional_matches_exact_joint(ising):
    rng = np.random.default_rng(3)
    theta = random_params(rng, 4, 1.5)
    states, probs = exact_distribution(ising, theta)
    table = {tuple(s): pr for s, pr in zip(states.tolist(), probs)}
    for x in states[::3]:
        for j in range(4):
            pair = []
            for u in (0, 1):
                y = list(x)
                y[j] = u
                pair.append(table[tuple(y)])
            expect = np.array(pair) / sum(pair)
            assert np.allclose(node_conditional(ising, theta, x, j), expect, atol=1e-12)


def test_phi_matches_oracle_general_alphabet():
    spec = ModelSpec(("a", "b", "c"), lambda u: {"a": 0.0, "b": 1.0, "c": -0.5}[u],
                     lambda u, v: float(u == v))
    rng = np.random.default_rng(9)
    for _ in range(20):
        theta = random_params(rng, 5, 2.0)
        x = rng.integers(0, 3, size=5)
        assert phi(spec, theta, x) == pytest.approx(phi_oracle(spec, theta.dense(), x), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.1, 50))
def test_conditionals_normalized_without_overflow(seed, scale):
    from mrf_changepoint import make_ising_spec
    spec = make_ising_spec()
    rng = np.random.default_rng(seed)
    theta = random_params(rng, 4, scale)
    x = rng.integers(0, 2, size=4)
    for j in range(4):
        pr = node_conditional(spec, theta, x, j)
        assert np.all(pr >= 0) and abs(pr.sum() - 1) < 1e-12
    assert np.isfinite(phi(spec, theta, x))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2 ** 31), st.floats(0.01, 0.99))
def test_phi_convex_and_lipschitz(seed, lam):
    from mrf_changepoint import make_ising_spec
    spec = make_ising_spec()
    rng = np.random.default_rng(seed)
    p = int(rng.integers(1, 7))
    a, b = random_params(rng, p, 3.0), random_params(rng, p, 3.0)
    x = rng.integers(0, 2, size=p)
    mix = a.scaled(lam) + b.scaled(1 - lam)
    assert phi(spec, mix, x) <= lam * phi(spec, a, x) + (1 - lam) * phi(spec, b, x) + 1e-10
    assert abs(phi(spec, a, x) - phi(spec, b, x)) <= 2 * spec.c0 * (a - b).l1_norm() + 1e-12


def _fd_gradient(spec, theta, x, h=1e-5):
    g = np.empty(theta.d)
    for i in range(theta.d):
        e = np.zeros(theta.d)
        e[i] = h
        up = SymmetricParams(theta.p, theta.entries + e)
        dn = SymmetricParams(theta.p, theta.entries - e)
        g[i] = (phi_oracle(spec, up.dense(), x) - phi_oracle(spec, dn.dense(), x)) / (2 * h)
    return g


def test_gradient_finite_differences_p6(ising):
    rng = np.random.default_rng(11)
    for _ in range(10):
        theta = random_params(rng, 6, 2.0)
        x = rng.integers(0, 2, size=6)
        g = phi_gradient(ising, theta, x).entries
        fd = _fd_gradient(ising, theta, x)
        assert np.max(np.abs(g - fd)) / max(1.0, np.max(np.abs(fd))) < 1e-6


def test_gradient_zero_theta_diagonal(ising):
    g = phi_gradient(ising, SymmetricParams.zeros(3), [1, 1, 1])
    assert g.get(0, 0) == pytest.approx(-0.5)
    # off-diagonal folds both conditionals: 2 * (0.5 - 1)
    assert g.get(1, 0) == pytest.approx(-1.0)


def test_gradient_general_alphabet_fd():
    spec = ModelSpec((0, 1, 2), lambda u: u, lambda u, v: u * v)
    rng = np.random.default_rng(5)
    theta = random_params(rng, 4, 0.7)
    x = rng.integers(0, 3, size=4)
    g = phi_gradient(spec, theta, x).entries
    assert np.allclose(g, _fd_gradient(spec, theta, x), rtol=1e-6, atol=1e-7)


def test_segment_objective_examples(ising):
    rng = np.random.default_rng(2)
    data = Dataset(rng.integers(0, 2, size=(30, 4)))
    zero = SymmetricParams.zeros(4)
    obj = segment_objective(ising, zero, data, (5, 14), 30)
    assert obj.value == pytest.approx(10 * 4 * math.log(2) / 30, rel=1e-13)
    theta = random_params(rng, 4)
    single = segment_objective(ising, theta, data, (7, 7), 30).value
    assert single == pytest.approx(phi(ising, theta, data.values[6]) / 30, rel=1e-13)
    whole = segment_objective(ising, theta, data, (3, 25), 30).value
    parts = (segment_objective(ising, theta, data, (3, 11), 30).value
             + segment_objective(ising, theta, data, (12, 25), 30).value)
    assert abs(whole - parts) <= 1e-12
    rows = phi_rows(ising, theta, data.values[2:25])
    assert rows.sum() / 30 == pytest.approx(whole, rel=1e-12)


def test_bad_inputs(ising):
    theta = SymmetricParams.zeros(3)
    with pytest.raises(MRFError):
        phi(ising, theta, [0, 1])
    with pytest.raises(MRFError):
        phi(ising, theta, [0, 1, 2])
    with pytest.raises(MRFError):
        node_conditional(ising, theta, [0, 1, 0], 3)
