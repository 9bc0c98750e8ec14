import math

import numpy as np
import pytest

from mrf_changepoint.core import MRFError
from mrf_changepoint.estimator import SolverOptions
from mrf_changepoint.scan import (
    CHAIN_LENGTH,
    ProfileEngine,
    ScanError,
    Tuning,
    argmin_first,
    basic_scan,
    build_domain,
    default_margin,
    domain_from_taus,
    fast_scan,
    nw_smooth,
    profile_objective,
)
from mrf_changepoint.simulate import SamplerOptions, ScenarioSpec, build_scenario

FAST_SAMPLER = SamplerOptions(200, 2)
BIC = Tuning(mode="bic-constant")


def _scenario(p=8, T=160, tau=80, density=0.3, similarity=0.0, seed=0):
    sc = ScenarioSpec(p, T, tau, density, similarity, seed, sampler=FAST_SAMPLER)
    return build_scenario(sc)


def test_domain_examples():
    d = build_domain(700, 60, 60, 10)
    assert len(d) == 59 and d.taus[0] == 60 and d.taus[-1] == 640
    assert build_domain(50, 5, 5, 1).taus == tuple(range(5, 46))
    with pytest.raises(ScanError):
        build_domain(100, 50, 50)
    with pytest.raises(ScanError):
        build_domain(100, 10, 10, 0)
    assert default_margin(700) == 56 and default_margin(100) == 30
    assert domain_from_taus([30, 10, 20], 50).taus == (10, 20, 30)


def test_argmin_ties_go_left():
    assert argmin_first([3.0, 1.0, 1.0, 2.0]) == 1


def test_large_lambda_flat_curve(ising):
    _, _, data = _scenario()
    for tau in (20, 80, 140):
        value, f1, f2 = profile_objective(ising, data, tau, (50.0, 50.0))
        assert f1.theta_hat.nnz() == f2.theta_hat.nnz() == 0
        assert value == pytest.approx(data.p * math.log(2), rel=1e-13)


def test_null_curve_flatter_than_change_curve(ising):
    dom = build_domain(160, 30, 30, 10)
    spreads = {}
    for sim in (0.0, 1.0):
        _, _, data = _scenario(similarity=sim, seed=3)
        curve = [v for _, v in basic_scan(ising, data, dom, BIC, threads=1).curve]
        spreads[sim] = max(curve) - min(curve)
    assert spreads[1.0] < spreads[0.0]


def test_profile_minimum_near_truth(ising):
    wins = 0
    for seed in range(10):
        _, _, data = _scenario(p=10, T=200, tau=100, density=0.3, seed=seed)
        eng = ProfileEngine(ising, data, BIC)
        eng.resolve_constants(domain_from_taus([50, 100, 150], 200))
        v = {pt.tau: pt.value for pt in eng.evaluate([50, 100, 150])}
        wins += v[100] <= v[50] and v[100] <= v[150]
    assert wins > 5


def test_single_candidate_domain(ising):
    _, _, data = _scenario()
    r = basic_scan(ising, data, domain_from_taus([57], 160), BIC)
    assert r.tau_hat == 57 and r.n_profile_fits == 1


def test_basic_scan_result_contract(ising):
    _, _, data = _scenario()
    dom = build_domain(160, 30, 30, 5)
    r = basic_scan(ising, data, dom, BIC, threads=1)
    assert r.tau_hat in dom.taus
    assert r.n_profile_fits == len(dom)
    assert [t for t, _ in r.curve] == list(dom.taus)
    assert r.tau_hat == r.curve[argmin_first([v for _, v in r.curve])][0]
    doc = r.to_json()
    assert doc["schema_version"] == 1 and doc["penalties"]["lambda1"] > 0


def test_time_reversal(ising):
    _, _, data = _scenario(seed=4)
    dom = build_domain(160, 30, 30, 5)
    opts = SolverOptions(tol=1e-10)
    fwd = basic_scan(ising, data, dom, BIC, opts, threads=1)
    rev = basic_scan(ising, data.reversed(), dom.mirrored(160), BIC, opts, threads=1)
    mirrored = dict(rev.curve)
    for tau, v in fwd.curve:
        assert abs(v - mirrored[160 - tau]) <= 1e-9 * abs(v)


def test_warm_and_cold_starts_agree(ising):
    _, _, data = _scenario(seed=5)
    dom = build_domain(160, 30, 30, 4)
    opts = SolverOptions(tol=1e-10)
    warm = basic_scan(ising, data, dom, Tuning(mode="schedule", a1=0.3, a2=0.3), opts)
    cold = basic_scan(ising, data, dom, Tuning(mode="schedule", a1=0.3, a2=0.3,
                                               warm_start=False), opts)
    for (_, a), (_, b) in zip(warm.curve, cold.curve):
        assert abs(a - b) <= 1e-8


@pytest.mark.parametrize("mode", ["bic-constant", "bic"])
def test_thread_count_does_not_change_results(ising, mode):
    _, _, data = _scenario(seed=6)
    dom = build_domain(160, 30, 30, 10 if mode == "bic" else 3)
    assert len(dom) > 2 * CHAIN_LENGTH or mode == "bic"
    tuning = Tuning(mode=mode, a_grid=(1.0, 0.5, 0.25, 0.12)) if mode == "bic" else BIC
    docs = []
    for threads in (1, 4):
        d = basic_scan(ising, data, dom, tuning, threads=threads).to_json()
        d.pop("runtime_seconds")
        docs.append(d)
    assert docs[0] == docs[1]


def test_nw_smoothing_examples():
    pts = [(t, 2.5) for t in range(0, 50, 5)]
    _, y = nw_smooth(pts, 7.5, (0, 45))
    assert np.allclose(y, 2.5, rtol=0, atol=1e-14)
    rng = np.random.default_rng(0)
    raw = [(t, float(rng.normal())) for t in range(0, 50, 5)]
    grid, y = nw_smooth(raw, 0.5, (0, 45))
    at_nodes = y[::5]
    assert np.allclose(at_nodes, [v for _, v in raw], atol=1e-9)
    lin = [(t, 3.0 * t) for t in range(0, 100, 10)]
    grid, y = nw_smooth(lin, 15.0, (0, 90))
    for g, v in zip(grid, y):
        lo, hi = 3.0 * (g // 10 * 10 - 10), 3.0 * (g // 10 * 10 + 20)
        assert 0.0 <= v <= 270.0 and (g < 20 or g > 70 or lo <= v <= hi)
    with pytest.raises(ScanError):
        nw_smooth(pts, 0.0, (0, 45))
    with pytest.raises(ScanError):
        nw_smooth([(0, 1.0), (1000, 2.0)], 1.0, (0, 1000))


def test_fast_scan_matches_basic_on_full_grid(ising):
    _, _, data = _scenario(p=5, T=120, tau=60, seed=7)
    dom = build_domain(120, 20, 20, 1)
    basic = basic_scan(ising, data, dom, BIC)
    h = 0.25
    fast = fast_scan(ising, data, dom, halfwidth=100, step2=1, bandwidth1=h, bandwidth2=h,
                     tuning=BIC)
    assert fast.stage2["grid"] == list(dom.taus)
    assert abs(fast.tau_hat - basic.tau_hat) <= h


def test_fast_scan_stage_metadata(ising):
    _, _, data = _scenario(T=200, tau=100, seed=8)
    stage1 = build_domain(200, 30, 30, 10)
    r = fast_scan(ising, data, stage1, 30, 3, 15.0, tuning=BIC)
    s1, s2 = r.stage1, r.stage2
    assert s1["grid"] == list(stage1.taus) and s1["bandwidth"] == 15.0
    assert len(s2["grid"]) == 21 or s2["grid"][0] == 30 or s2["grid"][-1] == 170
    assert s2["grid"][0] >= s1["tau_hat"] - 30 and s2["grid"][-1] <= s1["tau_hat"] + 30
    assert r.tau_hat == s2["tau_hat"]
    assert r.n_profile_fits <= len(s1["grid"]) + len(s2["grid"])
    assert stage1.taus[0] <= r.tau_hat <= stage1.taus[-1] + 30


def test_fast_scan_rejects_bad_stage2(ising):
    _, _, data = _scenario()
    with pytest.raises(ScanError):
        fast_scan(ising, data, build_domain(160, 30, 30, 10), 2, 3)
    with pytest.raises(MRFError):
        Tuning(mode="other")
