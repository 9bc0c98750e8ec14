"""Profile pseudo-likelihood change-point scans.

``basic_scan`` fits both segments at every candidate change-point and keeps
the minimizer of the profile objective.  ``fast_scan`` runs a coarse grid,
smooths it with a Nadaraya-Watson kernel, then refines on a fine grid around
the smoothed minimizer.

Penalties come from a :class:`Tuning` policy:

``schedule``
    ``lam_1(tau) = a1 c0 sqrt(tau log(dT)) / T`` (and the mirror for side 2)
    with fixed ``a1, a2``.
``bic``
    per candidate and per side, the constant ``a`` is picked from
    ``a_grid`` by BIC.
``bic-constant``
    ``a1`` and ``a2`` are picked once by BIC at a pilot change-point, then
    the schedule is used everywhere; the final fits at the estimate are
    re-tuned by BIC.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Sequence

import numpy as np

from .core import SCHEMA_VERSION, Dataset, ModelSpec, MRFError, SymmetricParams
from .estimator import (
    DEFAULT_SOLVER,
    FitResult,
    PenaltySchedule,
    SegmentProblem,
    SolverOptions,
    fit_problem,
    penalty_at,
    select_bic_problem,
)

CHAIN_LENGTH = 8
TUNING_MODES = ("schedule", "bic", "bic-constant")


class ScanError(MRFError):
    pass


@dataclass(frozen=True)
class SearchDomain:
    k_l: int
    k_u: int
    step: int
    taus: tuple[int, ...]

    def __len__(self):
        return len(self.taus)

    def mirrored(self, T: int) -> "SearchDomain":
        """Domain of the time-reversed series: ``tau -> T - tau``."""
        return SearchDomain(self.k_u, self.k_l, self.step, tuple(sorted(T - t for t in self.taus)))


def build_domain(T: int, k_l: int, k_u: int, step: int = 1) -> SearchDomain:
    """Candidates ``{k_l, k_l + step, ...}`` not exceeding ``T - k_u``."""
    if k_l < 1 or k_u < 1:
        raise ScanError("margins must be >= 1")
    if step < 1:
        raise ScanError("step must be >= 1")
    if k_l + k_u >= T:
        raise ScanError(f"empty search domain: k_l + k_u = {k_l + k_u} >= T = {T}")
    return SearchDomain(k_l, k_u, step, tuple(range(k_l, T - k_u + 1, step)))


def default_margin(T: int) -> int:
    return max(30, math.ceil(0.08 * T))


def domain_from_taus(taus: Sequence[int], T: int) -> SearchDomain:
    taus = tuple(sorted(set(int(t) for t in taus)))
    if not taus:
        raise ScanError("empty search domain")
    if taus[0] < 1 or taus[-1] > T - 1:
        raise ScanError("candidates must lie in [1, T-1]")
    step = taus[1] - taus[0] if len(taus) > 1 else 1
    return SearchDomain(taus[0], T - taus[-1], step, taus)


def default_a_grid(decades: float = 2.0, per_decade: int = 20, top: float = 2.0) -> tuple:
    n = int(round(decades * per_decade)) + 1
    return tuple(float(top * 10.0 ** (-i / per_decade)) for i in range(n))


@dataclass(frozen=True)
class Tuning:
    mode: str = "schedule"
    a1: float = 32.0
    a2: float = 32.0
    a_grid: tuple = field(default_factory=default_a_grid)
    pilot_tau: int | None = None
    warm_start: bool = True

    def __post_init__(self):
        if self.mode not in TUNING_MODES:
            raise ScanError(f"tuning mode must be one of {TUNING_MODES}")
        if self.a1 <= 0 or self.a2 <= 0:
            raise ScanError("penalty constants must be positive")
        if self.mode != "schedule" and (not self.a_grid or min(self.a_grid) <= 0):
            raise ScanError("a_grid must hold positive values")

    def to_json(self) -> dict:
        d = asdict(self)
        d["a_grid"] = list(self.a_grid)
        return d


@dataclass(frozen=True)
class ProfilePoint:
    tau: int
    value: float
    fit1: FitResult
    fit2: FitResult
    a1: float
    a2: float

    @property
    def converged(self) -> bool:
        return self.fit1.converged and self.fit2.converged


class ProfileEngine:
    """Evaluates the profile objective on sets of candidates with caching.

    Candidates are split into contiguous chains of ``CHAIN_LENGTH`` points
    that are processed in order (each fit warm-started from its predecessor
    in the chain).  Chain boundaries depend only on the candidate list, so
    results do not depend on the number of worker threads.
    """

    def __init__(self, spec: ModelSpec, data: Dataset, tuning: Tuning = Tuning(),
                 opts: SolverOptions = DEFAULT_SOLVER, threads: int | None = None):
        data.validate(spec)
        self.spec = spec
        self.data = data
        self.T = data.T
        self.tuning = tuning
        self.opts = opts
        self.threads = threads
        self.schedule = PenaltySchedule.for_data(spec, data, tuning.a1, tuning.a2)
        self._cache: dict[int, ProfilePoint] = {}
        self.n_fits = 0

    # -- penalties ---------------------------------------------------------
    def lam(self, tau: int, side: str, a: float) -> float:
        return penalty_at(replace(self.schedule, a1=a, a2=a), tau, side)

    def _problem(self, tau: int, side: str) -> SegmentProblem:
        if side == "first":
            X = self.data.rows(1, tau)
        else:
            X = self.data.rows(tau + 1, self.T)
        return SegmentProblem(self.spec, X, self.T)

    def _bic_side(self, tau: int, side: str) -> tuple[float, FitResult]:
        """Pick ``a`` for one side by BIC; returns ``(a, fit)``."""
        grid_a = sorted(self.tuning.a_grid, reverse=True)
        lams = [self.lam(tau, side, a) for a in grid_a]
        sel = select_bic_problem(self._problem(tau, side), lams, self.opts)
        return grid_a[lams.index(sel.lam)], sel.fit

    def resolve_constants(self, domain: SearchDomain) -> tuple[float, float]:
        """BIC choice of ``(a1, a2)`` at the pilot candidate (bic-constant mode)."""
        tau = self.tuning.pilot_tau
        if tau is None:
            tau = domain.taus[len(domain.taus) // 2]
        if not 1 <= tau < self.T:
            raise ScanError(f"pilot tau {tau} outside [1, {self.T - 1}]")
        a1, _ = self._bic_side(tau, "first")
        a2, _ = self._bic_side(tau, "second")
        self.schedule = replace(self.schedule, a1=a1, a2=a2)
        self.pilot = tau
        return a1, a2

    # -- evaluation --------------------------------------------------------
    def _point(self, tau: int, prev: ProfilePoint | None) -> ProfilePoint:
        if not 1 <= tau < self.T:
            raise ScanError(f"tau={tau} outside [1, {self.T - 1}]")
        if self.tuning.mode == "bic":
            a1, fit1 = self._bic_side(tau, "first")
            a2, fit2 = self._bic_side(tau, "second")
        else:
            a1, a2 = self.schedule.a1, self.schedule.a2
            init1 = prev.fit1.theta_hat if prev is not None else None
            init2 = prev.fit2.theta_hat if prev is not None else None
            fit1 = fit_problem(self._problem(tau, "first"), penalty_at(self.schedule, tau, "first"),
                               init1, self.opts)
            fit2 = fit_problem(self._problem(tau, "second"),
                               penalty_at(self.schedule, tau, "second"), init2, self.opts)
        return ProfilePoint(tau, fit1.loss_value + fit2.loss_value, fit1, fit2, a1, a2)

    def _chain(self, taus: Sequence[int]) -> list[ProfilePoint]:
        out = []
        prev = None
        for tau in taus:
            pt = self._point(tau, prev)
            out.append(pt)
            if self.tuning.warm_start:
                prev = pt
        return out

    def evaluate(self, taus: Sequence[int]) -> list[ProfilePoint]:
        todo = sorted(set(int(t) for t in taus) - set(self._cache))
        chains = [todo[i:i + CHAIN_LENGTH] for i in range(0, len(todo), CHAIN_LENGTH)]
        if chains:
            if self.threads == 1 or len(chains) == 1:
                results = [self._chain(c) for c in chains]
            else:
                with ThreadPoolExecutor(max_workers=self.threads) as pool:
                    results = list(pool.map(self._chain, chains))
            for chain in results:
                for pt in chain:
                    self._cache[pt.tau] = pt
            self.n_fits += len(todo)
        return [self._cache[int(t)] for t in sorted(set(int(t) for t in taus))]

    def refit_bic(self, tau: int) -> tuple[FitResult, FitResult, float, float]:
        a1, fit1 = self._bic_side(tau, "first")
        a2, fit2 = self._bic_side(tau, "second")
        return fit1, fit2, a1, a2


def profile_objective(spec: ModelSpec, data: Dataset, tau: int, lambda_pair: tuple[float, float],
                      warm_starts: tuple | None = None,
                      opts: SolverOptions = DEFAULT_SOLVER) -> tuple[float, FitResult, FitResult]:
    """Unpenalized two-segment objective at the penalized fits for one candidate."""
    T = data.T
    if not 1 <= tau < T:
        raise ScanError(f"tau={tau} outside [1, {T - 1}]")
    init1, init2 = warm_starts if warm_starts is not None else (None, None)
    fit1 = fit_problem(SegmentProblem(spec, data.rows(1, tau), T), lambda_pair[0], init1, opts)
    fit2 = fit_problem(SegmentProblem(spec, data.rows(tau + 1, T), T), lambda_pair[1], init2, opts)
    return fit1.loss_value + fit2.loss_value, fit1, fit2


def argmin_first(values: Sequence[float]) -> int:
    """Index of the smallest value; ties resolve to the earliest index."""
    return int(np.argmin(np.asarray(values, dtype=float)))


def nw_smooth(points: Sequence[tuple[float, float]], bandwidth: float,
              eval_range: tuple[int, int]) -> tuple[np.ndarray, np.ndarray]:
    """Gaussian-kernel Nadaraya-Watson average evaluated at every integer of ``eval_range``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise ScanError("smoothing needs at least two points")
    if not bandwidth > 0:
        raise ScanError("bandwidth must be positive")
    lo, hi = eval_range
    if lo > hi:
        raise ScanError("empty evaluation range")
    grid = np.arange(lo, hi + 1)
    z = (grid[:, None] - pts[None, :, 0]) / bandwidth
    K = np.exp(-0.5 * z * z)
    mass = K.sum(axis=1)
    if np.any(mass <= 1e-300):
        bad = grid[mass <= 1e-300][0]
        raise ScanError(f"no kernel mass at tau={bad}; bandwidth too small for the grid")
    return grid, (K @ pts[:, 1]) / mass


@dataclass
class ScanResult:
    tau_hat: int
    T: int
    curve: list[tuple[int, float]]
    fit1: FitResult
    fit2: FitResult
    penalties: dict
    tuning: dict
    n_profile_fits: int
    n_unconverged: int
    stage1: dict | None = None
    stage2: dict | None = None
    runtime_seconds: float = 0.0
    method: str = "basic"

    @property
    def alpha_hat(self) -> float:
        return self.tau_hat / self.T

    @property
    def theta1_hat(self) -> SymmetricParams:
        return self.fit1.theta_hat

    @property
    def theta2_hat(self) -> SymmetricParams:
        return self.fit2.theta_hat

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "method": self.method,
            "tau_hat": self.tau_hat,
            "alpha_hat": self.alpha_hat,
            "T": self.T,
            "curve": [{"tau": t, "objective": v} for t, v in self.curve],
            "stage1": self.stage1,
            "stage2": self.stage2,
            "theta1": self.fit1.theta_hat.to_json(),
            "theta2": self.fit2.theta_hat.to_json(),
            "fit1": _fit_meta(self.fit1),
            "fit2": _fit_meta(self.fit2),
            "penalties": self.penalties,
            "tuning": self.tuning,
            "n_profile_fits": self.n_profile_fits,
            "n_unconverged": self.n_unconverged,
            "runtime_seconds": self.runtime_seconds,
        }


def _fit_meta(fit: FitResult) -> dict:
    return {"lambda": fit.lam, "iterations": fit.iterations, "kkt_residual": fit.kkt_residual,
            "converged": fit.converged, "objective_value": fit.objective_value,
            "loss_value": fit.loss_value}


def _finish(engine: ProfileEngine, tau_hat: int, method: str, curve, stage1=None, stage2=None,
            started: float = 0.0, n_fits: int | None = None) -> ScanResult:
    pt = engine._cache[tau_hat]
    fit1, fit2, a1, a2 = pt.fit1, pt.fit2, pt.a1, pt.a2
    if engine.tuning.mode == "bic-constant":
        fit1, fit2, a1, a2 = engine.refit_bic(tau_hat)
    penalties = {"lambda1": fit1.lam, "lambda2": fit2.lam, "a1": a1, "a2": a2,
                 "c0": engine.spec.c0, "d": engine.schedule.d}
    tuning = engine.tuning.to_json()
    if engine.tuning.mode == "bic-constant":
        tuning["selected_a1"] = engine.schedule.a1
        tuning["selected_a2"] = engine.schedule.a2
        tuning["pilot_tau"] = engine.pilot
    n_bad = sum(not p.converged for p in engine._cache.values())
    return ScanResult(tau_hat, engine.T, curve, fit1, fit2, penalties, tuning,
                      engine.n_fits if n_fits is None else n_fits, n_bad, stage1, stage2,
                      time.perf_counter() - started, method)


def basic_scan(spec: ModelSpec, data: Dataset, domain: SearchDomain, tuning: Tuning = Tuning(),
               opts: SolverOptions = DEFAULT_SOLVER, threads: int | None = None) -> ScanResult:
    """Evaluate every candidate and return the profile minimizer (earliest on ties)."""
    started = time.perf_counter()
    if not domain.taus:
        raise ScanError("empty search domain")
    engine = ProfileEngine(spec, data, tuning, opts, threads)
    if tuning.mode == "bic-constant":
        engine.resolve_constants(domain)
    points = engine.evaluate(domain.taus)
    curve = [(p.tau, p.value) for p in points]
    tau_hat = curve[argmin_first([v for _, v in curve])][0]
    return _finish(engine, tau_hat, "basic", curve, started=started)


def fast_scan(spec: ModelSpec, data: Dataset, stage1: SearchDomain, halfwidth: int, step2: int,
              bandwidth1: float | None = None, bandwidth2: float | None = None,
              tuning: Tuning = Tuning(), opts: SolverOptions = DEFAULT_SOLVER,
              threads: int | None = None) -> ScanResult:
    """Two-stage scan: smoothed coarse grid, then a smoothed fine grid around its minimizer.

    Bandwidths default to 1.5 times the respective grid step.
    """
    started = time.perf_counter()
    if step2 < 1 or halfwidth < step2:
        raise ScanError("stage-2 halfwidth must be >= stage-2 step >= 1")
    if len(stage1) < 2:
        raise ScanError("stage-1 grid needs at least two candidates")
    h1 = 1.5 * stage1.step if bandwidth1 is None else bandwidth1
    h2 = 1.5 * step2 if bandwidth2 is None else bandwidth2
    engine = ProfileEngine(spec, data, tuning, opts, threads)
    if tuning.mode == "bic-constant":
        engine.resolve_constants(stage1)

    pts1 = engine.evaluate(stage1.taus)
    raw1 = [(p.tau, p.value) for p in pts1]
    grid1, smooth1 = nw_smooth(raw1, h1, (stage1.taus[0], stage1.taus[-1]))
    tau1 = int(grid1[argmin_first(smooth1)])

    # stage 2 stays inside the margins of the stage-1 domain
    lo = max(1, stage1.taus[0], tau1 - halfwidth)
    hi = min(data.T - 1, data.T - stage1.k_u, tau1 + halfwidth)
    taus2 = [t for t in range(tau1 - halfwidth, tau1 + halfwidth + 1, step2) if lo <= t <= hi]
    if not taus2:
        raise ScanError("stage-2 window is empty after clipping")
    pts2 = engine.evaluate(taus2)
    raw2 = [(p.tau, p.value) for p in pts2]
    if len(raw2) >= 2:
        grid2, smooth2 = nw_smooth(raw2, h2, (taus2[0], taus2[-1]))
    else:
        grid2, smooth2 = np.array([taus2[0]]), np.array([raw2[0][1]])
    tau2 = int(grid2[argmin_first(smooth2)])
    n_profile = engine.n_fits
    # the smoothed minimizer may fall between grid points; fit there for the report
    engine.evaluate([tau2])

    stage1_meta = {
        "grid": list(stage1.taus), "bandwidth": h1, "tau_hat": tau1,
        "curve": [{"tau": t, "objective": v} for t, v in raw1],
        "smoothed": [{"tau": int(t), "objective": float(v)} for t, v in zip(grid1, smooth1)],
    }
    stage2_meta = {
        "grid": taus2, "halfwidth": halfwidth, "step": step2, "bandwidth": h2,
        "window": [taus2[0], taus2[-1]], "tau_hat": tau2,
        "curve": [{"tau": t, "objective": v} for t, v in raw2],
        "smoothed": [{"tau": int(t), "objective": float(v)} for t, v in zip(grid2, smooth2)],
    }
    return _finish(engine, tau2, "fast", raw2, stage1_meta, stage2_meta, started, n_profile)
