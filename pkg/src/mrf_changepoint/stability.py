"""Bootstrap stability selection of network edges on one time segment."""

from __future__ import annotations

import builtins
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .core import SCHEMA_VERSION, Dataset, ModelSpec, MRFError, check_range, packed_indices
from .estimator import (
    DEFAULT_SOLVER,
    SegmentProblem,
    SolverOptions,
    fit_problem,
    lambda_grid,
    lambda_max,
    select_bic_problem,
)
from .simulate import child_seed


@dataclass(frozen=True)
class LambdaPolicy:
    """``fixed`` uses ``lam`` for every resample; ``bic`` re-tunes each resample over ``grid``."""

    mode: str = "bic"
    lam: float | None = None
    grid: tuple | None = None
    decades: float = 1.5
    per_decade: int = 20

    def __post_init__(self):
        if self.mode not in ("fixed", "bic"):
            raise MRFError("lambda policy must be 'fixed' or 'bic'")
        if self.mode == "fixed" and not (self.lam and self.lam > 0):
            raise MRFError("fixed policy needs a positive lambda")


@dataclass(frozen=True)
class StabilityResult:
    counts: np.ndarray            # per packed off-diagonal slot, times selected
    n_bootstrap: int
    threshold: float
    p: int
    lambdas: tuple[float, ...]    # penalty used for each resample

    @property
    def selection_frequency(self) -> np.ndarray:
        """``p x p`` matrix of inclusion fractions (zero diagonal)."""
        F = np.zeros((self.p, self.p))
        rows, cols = _edge_slots(self.p)
        F[rows, cols] = self.counts / self.n_bootstrap
        F[cols, rows] = F[rows, cols]
        return F

    def stable_mask(self, threshold: float | None = None) -> np.ndarray:
        thr = Fraction(str(self.threshold if threshold is None else threshold))
        # count / n > thr, compared exactly
        return self.counts * thr.denominator > thr.numerator * self.n_bootstrap

    @property
    def stable_adjacency(self) -> np.ndarray:
        A = np.zeros((self.p, self.p), dtype=np.int8)
        rows, cols = _edge_slots(self.p)
        m = self.stable_mask()
        A[rows[m], cols[m]] = 1
        A[cols[m], rows[m]] = 1
        return A

    def stable_edges(self, threshold: float | None = None) -> list[tuple[int, int]]:
        rows, cols = _edge_slots(self.p)
        m = self.stable_mask(threshold)
        return [(int(j), int(k)) for j, k in zip(rows[m], cols[m])]

    def to_json(self) -> dict:
        rows, cols = _edge_slots(self.p)
        return {
            "schema_version": SCHEMA_VERSION,
            "p": self.p,
            "n_bootstrap": self.n_bootstrap,
            "threshold": self.threshold,
            "frequencies": [
                {"j": int(j), "k": int(k), "count": int(c), "frequency": c / self.n_bootstrap}
                for j, k, c in zip(rows, cols, self.counts) if c
            ],
            "stable_edges": [[j, k] for j, k in self.stable_edges()],
            "lambdas": list(self.lambdas),
        }


def _edge_slots(p: int) -> tuple[np.ndarray, np.ndarray]:
    rows, cols = packed_indices(p)
    off = rows != cols
    return rows[off], cols[off]


def stability_select(spec: ModelSpec, data: Dataset, range: tuple[int, int], n_bootstrap: int = 50,
                     threshold: float = 0.9, lambda_policy: LambdaPolicy = LambdaPolicy(),
                     seed=0, threads: int | None = None,
                     opts: SolverOptions = DEFAULT_SOLVER) -> StabilityResult:
    """Refit on row-bootstrap resamples of a segment and count edge inclusions.

    Resample ``b`` draws its rows with the generator seeded by stream ``b``
    of ``seed``, so the result does not depend on ``threads``.  Fits use the
    segment length as the loss divisor.
    """
    if n_bootstrap < 1:
        raise MRFError("n_bootstrap must be >= 1")
    if not 0 < threshold < 1:
        raise MRFError("threshold must lie in (0, 1)")
    start, end = range
    check_range(start, end, data.T)
    n = end - start + 1
    segment = data.rows(start, end)
    p = data.p
    if lambda_policy.mode == "bic":
        grid = lambda_policy.grid
        if grid is None:
            top = lambda_max(spec, data, range, n)
            if top <= 0:
                raise MRFError("segment gradient vanishes at zero; supply a grid")
            grid = tuple(lambda_grid(top, lambda_policy.decades, lambda_policy.per_decade))
        grid = tuple(sorted(grid, reverse=True))
    off = packed_indices(p)[0] != packed_indices(p)[1]

    def one(b: int):
        rng = np.random.default_rng(child_seed(seed, b))
        rows = rng.integers(0, n, size=n)
        problem = SegmentProblem(spec, segment[rows], n)
        if lambda_policy.mode == "fixed":
            fit = fit_problem(problem, lambda_policy.lam, None, opts)
            lam = lambda_policy.lam
        else:
            sel = select_bic_problem(problem, grid, opts)
            fit, lam = sel.fit, sel.lam
        return (fit.theta_hat.entries[off] != 0).astype(np.int64), lam

    if threads == 1:
        results = [one(b) for b in builtins.range(n_bootstrap)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(one, builtins.range(n_bootstrap)))
    counts = np.zeros(int(off.sum()), dtype=np.int64)
    for inc, _ in results:
        counts += inc
    return StabilityResult(counts, n_bootstrap, float(threshold), p,
                           tuple(float(lam) for _, lam in results))
