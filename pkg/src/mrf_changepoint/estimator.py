"""L1-penalized pseudo-likelihood fits, the penalty schedule and BIC tuning.

The fitted problem for a time range ``R`` is::

    minimize_theta  (1/scale_T) * sum_{t in R} phi(theta, x_t) + lam * ||theta||_1

with ``||.||_1`` summed over the packed entries (diagonal included).  It is
solved by proximal gradient descent with Barzilai-Borwein trial steps and a
backtracking test that keeps the penalized objective non-increasing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import kernels
from .core import Dataset, ModelSpec, MRFError, SymmetricParams, check_range, packed_indices


@dataclass(frozen=True)
class SolverOptions:
    tol: float = 1e-6          # converged when KKT residual <= tol * lam
    max_iter: int = 5000
    step_init: float = 1.0
    min_step: float = 1e-14


DEFAULT_SOLVER = SolverOptions()


@dataclass(frozen=True)
class PenaltySchedule:
    """``lam_1(tau) = a1 c0 sqrt(tau log(dT)) / T`` and its second-side twin."""

    a1: float
    a2: float
    c0: float
    T: int
    d: int

    def __post_init__(self):
        if min(self.a1, self.a2, self.c0) <= 0 or self.T < 2 or self.d < 1:
            raise MRFError("penalty schedule constants must be positive")

    @classmethod
    def for_data(cls, spec: ModelSpec, data: Dataset, a1: float = 32.0,
                 a2: float = 32.0) -> "PenaltySchedule":
        return cls(a1, a2, spec.c0, data.T, data.p * (data.p + 1) // 2)


def penalty_at(schedule: PenaltySchedule, tau: int, side: str) -> float:
    if not 1 <= tau < schedule.T:
        raise MRFError(f"tau={tau} outside [1, {schedule.T - 1}]")
    log_dT = math.log(schedule.d * schedule.T)
    if side == "first":
        return schedule.a1 * schedule.c0 * math.sqrt(tau * log_dT) / schedule.T
    if side == "second":
        return schedule.a2 * schedule.c0 * math.sqrt((schedule.T - tau) * log_dT) / schedule.T
    raise MRFError(f"side must be 'first' or 'second', got {side!r}")


@dataclass(frozen=True)
class FitResult:
    theta_hat: SymmetricParams
    objective_value: float     # penalized objective at theta_hat
    loss_value: float          # (1/scale_T) * sum phi at theta_hat
    lam: float
    iterations: int
    kkt_residual: float
    converged: bool

    def to_json(self) -> dict:
        return {
            "theta": self.theta_hat.to_json(),
            "objective_value": self.objective_value,
            "loss_value": self.loss_value,
            "lambda": self.lam,
            "iterations": self.iterations,
            "kkt_residual": self.kkt_residual,
            "converged": self.converged,
        }


def kkt_residual(theta: np.ndarray, grad: np.ndarray, lam: float) -> float:
    """Largest violation of the L1 subgradient conditions (packed vectors)."""
    nz = theta != 0.0
    r_nz = np.abs(grad[nz] + lam * np.sign(theta[nz]))
    r_z = np.maximum(0.0, np.abs(grad[~nz]) - lam)
    return float(max(r_nz.max(initial=0.0), r_z.max(initial=0.0)))


def soft_threshold(v: np.ndarray, thresh: float) -> np.ndarray:
    return np.sign(v) * np.maximum(np.abs(v) - thresh, 0.0)


class SegmentProblem:
    """Smooth part of the penalized problem on a fixed block of rows."""

    def __init__(self, spec: ModelSpec, X: np.ndarray, scale_T: float):
        if scale_T <= 0:
            raise MRFError("scale_T must be positive")
        self.X = np.ascontiguousarray(X, dtype=np.int32)
        self.p = self.X.shape[1]
        self.scale = float(scale_T)
        self.b0 = spec.b0_table
        self.bmat = spec.b_table
        self.rows, self.cols = packed_indices(self.p)
        self._W = np.zeros((self.p, self.p))
        self._G = np.zeros((self.p, self.p))

    def _load(self, theta: np.ndarray) -> np.ndarray:
        W = self._W
        W[self.rows, self.cols] = theta
        W[self.cols, self.rows] = theta
        return W

    def loss(self, theta: np.ndarray) -> float:
        return kernels.segment_loss(self.X, self._load(theta), self.b0, self.bmat) / self.scale

    def loss_grad(self, theta: np.ndarray) -> tuple[float, np.ndarray]:
        total = kernels.segment_loss_grad(self.X, self._load(theta), self.b0, self.bmat, self._G)
        return total / self.scale, self._G[self.rows, self.cols] / self.scale


def _solve(problem: SegmentProblem, lam: float, theta0: np.ndarray,
           opts: SolverOptions, trace: list | None = None):
    theta = theta0.copy()
    f, g = problem.loss_grad(theta)
    F = f + lam * np.abs(theta).sum()
    target = opts.tol * lam
    step = opts.step_init
    if trace is not None:
        trace.append(F)
    res = kkt_residual(theta, g, lam)
    it = 0
    while res > target and it < opts.max_iter:
        it += 1
        slack = 1e-14 * max(1.0, abs(F))
        while True:
            cand = soft_threshold(theta - step * g, step * lam)
            delta = cand - theta
            # most trial steps are accepted, so evaluate the gradient eagerly
            f_new, g_new = problem.loss_grad(cand)
            quad = f + float(g @ delta) + float(delta @ delta) / (2.0 * step)
            if f_new <= quad + slack:
                break
            step *= 0.5
            if step < opts.min_step:
                break
        if step < opts.min_step:
            break
        if not np.any(delta):
            break
        dg = g_new - g
        theta, f, g = cand, f_new, g_new
        F = f + lam * np.abs(theta).sum()
        if trace is not None:
            trace.append(F)
        res = kkt_residual(theta, g, lam)
        # Barzilai-Borwein trial step for the next iteration
        sy = float(delta @ dg)
        yy = float(dg @ dg)
        step = sy / yy if sy > 0 and yy > 0 else step * 2.0
        step = min(max(step, 1e-6), 1e6)
    return theta, f, F, it, res, res <= target


def fit_penalized(spec: ModelSpec, data: Dataset, range: tuple[int, int], scale_T: float,
                  lam: float, init: SymmetricParams | None = None,
                  opts: SolverOptions = DEFAULT_SOLVER) -> FitResult:
    """Penalized pseudo-likelihood fit on the 1-based inclusive time ``range``."""
    start, end = range
    check_range(start, end, data.T)
    problem = SegmentProblem(spec, data.rows(start, end), scale_T)
    return fit_problem(problem, lam, init, opts)


def fit_problem(problem: SegmentProblem, lam: float, init: SymmetricParams | None = None,
                opts: SolverOptions = DEFAULT_SOLVER, trace: list | None = None) -> FitResult:
    if not (lam > 0 and math.isfinite(lam)):
        raise MRFError(f"lambda must be positive and finite, got {lam}")
    p = problem.p
    theta0 = np.zeros(p * (p + 1) // 2) if init is None else np.array(init.entries)
    theta, f, F, it, res, ok = _solve(problem, lam, theta0, opts, trace)
    return FitResult(SymmetricParams(p, theta), float(F), float(f), float(lam), it, res, bool(ok))


def lambda_max(spec: ModelSpec, data: Dataset, range: tuple[int, int], scale_T: float) -> float:
    """Smallest penalty whose fit is exactly zero: ``max |grad at 0|``."""
    start, end = range
    check_range(start, end, data.T)
    problem = SegmentProblem(spec, data.rows(start, end), scale_T)
    _, g = problem.loss_grad(np.zeros(problem.rows.size))
    return float(np.abs(g).max())


def lambda_grid(lam_hi: float, decades: float = 1.5, per_decade: int = 20) -> np.ndarray:
    """Decreasing log-spaced grid ``lam_hi * 10**(-k/per_decade)``."""
    if lam_hi <= 0:
        raise MRFError("grid top must be positive")
    n = int(round(decades * per_decade)) + 1
    return lam_hi * 10.0 ** (-np.arange(n) / per_decade)


def bic_score(spec: ModelSpec, theta_hat: SymmetricParams, data: Dataset,
              range: tuple[int, int]) -> float:
    """``2 * sum phi + log(n) * ||theta||_0`` over the range (deviance form)."""
    start, end = range
    check_range(start, end, data.T)
    n = end - start + 1
    total = kernels.segment_loss(data.rows(start, end), theta_hat.dense(),
                                 spec.b0_table, spec.b_table)
    return 2.0 * total + math.log(n) * theta_hat.nnz()


@dataclass(frozen=True)
class BICSelection:
    lam: float
    fit: FitResult
    scores: tuple[float, ...]
    grid: tuple[float, ...]


def select_lambda_bic(spec: ModelSpec, data: Dataset, range: tuple[int, int],
                      lambda_grid: Sequence[float], scale_T: float | None = None,
                      opts: SolverOptions = DEFAULT_SOLVER) -> BICSelection:
    """Fit along the decreasing grid with warm starts and keep the BIC minimizer.

    Ties go to the larger penalty.  ``scale_T`` defaults to the series length.
    """
    grid = sorted((float(x) for x in lambda_grid), reverse=True)
    if not grid:
        raise MRFError("lambda grid is empty")
    if grid[-1] <= 0:
        raise MRFError("lambda grid values must be positive")
    start, end = range
    check_range(start, end, data.T)
    problem = SegmentProblem(spec, data.rows(start, end), data.T if scale_T is None else scale_T)
    return select_bic_problem(problem, grid, opts)


def select_bic_problem(problem: SegmentProblem, grid: Sequence[float],
                       opts: SolverOptions = DEFAULT_SOLVER) -> BICSelection:
    n = problem.X.shape[0]
    log_n = math.log(n)
    best = None
    scores = []
    init = None
    for lam in grid:
        fit = fit_problem(problem, lam, init, opts)
        init = fit.theta_hat
        # loss_value is scaled by 1/scale; BIC needs the raw sum
        score = 2.0 * fit.loss_value * problem.scale + log_n * fit.theta_hat.nnz()
        scores.append(score)
        if best is None or score < best[0]:
            best = (score, lam, fit)
    return BICSelection(best[1], best[2], tuple(scores), tuple(grid))


def with_tol(opts: SolverOptions, tol: float) -> SolverOptions:
    return replace(opts, tol=tol)
