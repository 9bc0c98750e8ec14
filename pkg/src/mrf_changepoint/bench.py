"""Replication harness: simulate, scan with both algorithms, summarize accuracy."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

from .core import SCHEMA_VERSION, ModelSpec, make_ising_spec
from .estimator import DEFAULT_SOLVER, SolverOptions
from .evaluation import changepoint_stats, recovery_report
from .scan import Tuning, basic_scan, build_domain, fast_scan
from .simulate import SamplerOptions, ScenarioSpec, build_scenario


@dataclass(frozen=True)
class BenchConfig:
    p: int = 15
    T: int = 400
    tau_star: int = 200
    density: float = 0.15
    similarities: tuple = (0.0, 0.4)
    seeds: tuple = tuple(range(10))
    k_l: int = 40
    k_u: int = 40
    step: int = 5
    stage1_step: int = 25
    stage2_halfwidth: int = 15
    stage2_step: int = 5
    tuning: Tuning = field(default_factory=lambda: Tuning(mode="bic-constant"))
    sampler: SamplerOptions = field(default_factory=SamplerOptions)
    run_basic: bool = True
    run_fast: bool = True

    def to_json(self) -> dict:
        d = asdict(self)
        d["tuning"] = self.tuning.to_json()
        d["similarities"] = list(self.similarities)
        d["seeds"] = list(self.seeds)
        return d


@dataclass
class Replicate:
    similarity: float
    seed: int
    basic: object = None       # ScanResult
    fast: object = None        # ScanResult
    recovery: object = None    # RecoveryReport for the basic scan
    theta1: object = None
    theta2: object = None
    data: object = None


def run_replicate(cfg: BenchConfig, similarity: float, seed: int, spec: ModelSpec | None = None,
                  opts: SolverOptions = DEFAULT_SOLVER, threads: int | None = None) -> Replicate:
    spec = make_ising_spec() if spec is None else spec
    scenario = ScenarioSpec(cfg.p, cfg.T, cfg.tau_star, cfg.density, similarity, seed,
                            sampler=cfg.sampler)
    theta1, theta2, data = build_scenario(scenario, spec)
    rep = Replicate(similarity, seed, theta1=theta1, theta2=theta2, data=data)
    if cfg.run_basic:
        rep.basic = basic_scan(spec, data, build_domain(cfg.T, cfg.k_l, cfg.k_u, cfg.step),
                               cfg.tuning, opts, threads)
        rep.recovery = recovery_report(rep.basic.theta1_hat, rep.basic.theta2_hat, theta1, theta2)
    if cfg.run_fast:
        rep.fast = fast_scan(spec, data, build_domain(cfg.T, cfg.k_l, cfg.k_u, cfg.stage1_step),
                             cfg.stage2_halfwidth, cfg.stage2_step, tuning=cfg.tuning,
                             opts=opts, threads=threads)
    return rep


def _mean(xs):
    xs = [x for x in xs if x is not None]
    return sum(xs) / len(xs) if xs else None


def summarize(cfg: BenchConfig, reps: list[Replicate]) -> dict:
    """Per-similarity accuracy and cost table; runtime fields are the only wall-clock values."""
    rows = []
    for sim in cfg.similarities:
        group = [r for r in reps if r.similarity == sim]
        for method in ("basic", "fast"):
            results = [getattr(r, method) for r in group if getattr(r, method) is not None]
            if not results:
                continue
            stats = changepoint_stats([s.tau_hat for s in results], cfg.tau_star)
            row = {
                "similarity": sim, "method": method, "n": len(results),
                "mean": stats.mean, "rmse": stats.rmse, "cv": stats.cv,
                "estimates": list(stats.estimates),
                "mean_profile_fits": _mean([s.n_profile_fits for s in results]),
                "mean_runtime_seconds": _mean([s.runtime_seconds for s in results]),
            }
            if method == "basic":
                recs = [r.recovery for r in group]
                row.update({
                    "specificity_first": _mean([x.first.specificity for x in recs]),
                    "sensitivity_first": _mean([x.first.sensitivity for x in recs]),
                    "specificity_second": _mean([x.second.specificity for x in recs]),
                    "sensitivity_second": _mean([x.second.sensitivity for x in recs]),
                    "relative_error_first": _mean([x.relative_error_first for x in recs]),
                    "relative_error_second": _mean([x.relative_error_second for x in recs]),
                })
            rows.append(row)
    return {"schema_version": SCHEMA_VERSION, "config": cfg.to_json(), "rows": rows}


def run_bench(cfg: BenchConfig, spec: ModelSpec | None = None, opts: SolverOptions = DEFAULT_SOLVER,
              threads: int | None = None, progress=None) -> tuple[dict, list[Replicate]]:
    started = time.perf_counter()
    reps = []
    for sim in cfg.similarities:
        for seed in cfg.seeds:
            rep = run_replicate(cfg, sim, seed, spec, opts, threads)
            rep.data = None
            reps.append(rep)
            if progress is not None:
                progress(rep)
    summary = summarize(cfg, reps)
    summary["runtime_seconds"] = time.perf_counter() - started
    return summary, reps
