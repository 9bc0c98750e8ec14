"""Accuracy metrics for change-point and network estimates, plus network summaries."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .core import SCHEMA_VERSION, GroupLabels, ModelSpec, MRFError, SymmetricParams, packed_indices
from .pseudolikelihood import phi_rows
from .simulate import SamplerOptions, child_seed, gibbs_sample


@dataclass(frozen=True)
class EdgeConfusion:
    """Off-diagonal support comparison.  Undefined rates are ``None``."""

    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def sensitivity(self) -> float | None:
        pos = self.tp + self.fn
        return self.tp / pos if pos else None

    @property
    def specificity(self) -> float | None:
        neg = self.tn + self.fp
        return self.tn / neg if neg else None

    def to_json(self) -> dict:
        return {**asdict(self), "sensitivity": self.sensitivity, "specificity": self.specificity,
                "positives": self.tp + self.fn, "negatives": self.tn + self.fp}


def edge_confusion(theta_hat: SymmetricParams, theta_true: SymmetricParams,
                   zero_tol: float = 0.0) -> EdgeConfusion:
    if theta_hat.p != theta_true.p:
        raise MRFError("dimension mismatch")
    off = theta_true.offdiag_mask()
    truth = np.abs(theta_true.entries[off]) > 0
    pred = np.abs(theta_hat.entries[off]) > zero_tol
    return EdgeConfusion(
        tp=int(np.sum(truth & pred)), fp=int(np.sum(~truth & pred)),
        tn=int(np.sum(~truth & ~pred)), fn=int(np.sum(truth & ~pred)),
    )


def relative_error(theta_hat: SymmetricParams, theta_true: SymmetricParams) -> float:
    """Frobenius ratio ``||hat - true|| / ||true||`` over the packed entries."""
    if theta_hat.p != theta_true.p:
        raise MRFError("dimension mismatch")
    denom = float(np.linalg.norm(theta_true.entries))
    if denom == 0.0:
        raise MRFError("relative error undefined for a zero true matrix")
    return float(np.linalg.norm(theta_hat.entries - theta_true.entries)) / denom


@dataclass(frozen=True)
class RecoveryReport:
    first: EdgeConfusion
    second: EdgeConfusion
    relative_error_first: float
    relative_error_second: float
    zero_tol: float = 0.0

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "zero_tol": self.zero_tol,
            "relative_error_formula": "frobenius_ratio",
            "first": {**self.first.to_json(), "relative_error": self.relative_error_first},
            "second": {**self.second.to_json(), "relative_error": self.relative_error_second},
        }


def recovery_report(theta1_hat: SymmetricParams, theta2_hat: SymmetricParams,
                    theta1_true: SymmetricParams, theta2_true: SymmetricParams,
                    zero_tol: float = 0.0) -> RecoveryReport:
    return RecoveryReport(
        edge_confusion(theta1_hat, theta1_true, zero_tol),
        edge_confusion(theta2_hat, theta2_true, zero_tol),
        relative_error(theta1_hat, theta1_true),
        relative_error(theta2_hat, theta2_true),
        zero_tol,
    )


@dataclass(frozen=True)
class ChangePointReport:
    estimates: tuple[int, ...]
    tau_star: int
    mean: float
    rmse: float
    cv: float

    def to_json(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, **asdict(self),
                "estimates": list(self.estimates)}


def changepoint_stats(estimates: Sequence[int], tau_star: int) -> ChangePointReport:
    """Mean, RMSE against the truth, and coefficient of variation (std/mean)."""
    est = np.asarray(list(estimates), dtype=float)
    if est.size == 0:
        raise MRFError("no estimates")
    mean = float(est.mean())
    rmse = float(np.sqrt(np.mean((est - tau_star) ** 2)))
    cv = float(est.std() / mean) if mean != 0 else 0.0
    return ChangePointReport(tuple(int(e) for e in est), int(tau_star), mean, rmse, cv)


# -- network summaries ------------------------------------------------------

def adjacency(theta: SymmetricParams) -> np.ndarray:
    """Binary off-diagonal support as a dense 0/1 matrix."""
    A = (theta.dense() != 0).astype(float)
    np.fill_diagonal(A, 0.0)
    return A


def _components(A: np.ndarray) -> list[np.ndarray]:
    p = A.shape[0]
    seen = np.zeros(p, bool)
    comps = []
    for s in range(p):
        if seen[s]:
            continue
        stack, comp = [s], []
        seen[s] = True
        while stack:
            v = stack.pop()
            comp.append(v)
            for w in np.nonzero(A[v])[0]:
                if not seen[w]:
                    seen[w] = True
                    stack.append(w)
        comps.append(np.array(sorted(comp)))
    return comps


def eigenvector_centrality(A: np.ndarray, tol: float = 1e-10, max_iter: int = 10000) -> np.ndarray:
    """Leading-eigenvector centrality, computed per connected component.

    Power iteration on ``A + I`` (same eigenvectors, no oscillation on
    bipartite pieces); each component is scaled so its largest entry is 1.
    Isolated nodes get 0.
    """
    A = np.abs(np.asarray(A, dtype=float))
    out = np.zeros(A.shape[0])
    for comp in _components(A):
        if comp.size < 2:
            continue
        M = A[np.ix_(comp, comp)] + np.eye(comp.size)
        v = np.full(comp.size, 1.0 / comp.size)
        for _ in range(max_iter):
            w = M @ v
            w /= w.max()
            if np.abs(w - v).max() < tol:
                v = w
                break
            v = w
        out[comp] = v / v.max()
    return out


def local_clustering(A: np.ndarray) -> np.ndarray:
    """Triangles over wedges at every node; 0 below degree 2."""
    deg = A.sum(axis=1)
    tri = np.diag(A @ A @ A) / 2.0
    wedges = deg * (deg - 1) / 2.0
    return np.divide(tri, wedges, out=np.zeros_like(tri), where=wedges > 0)


@dataclass(frozen=True)
class GroupStats:
    group: str
    size: int
    avg_degree: float
    avg_centrality: float
    avg_clustering: float


def network_stats(theta: SymmetricParams, groups: GroupLabels) -> list[GroupStats]:
    groups.check(theta.p)
    A = adjacency(theta)
    deg = A.sum(axis=1)
    cent = eigenvector_centrality(A)
    clus = local_clustering(A)
    out = []
    for g in groups.groups():
        idx = groups.members(g)
        out.append(GroupStats(str(g), int(idx.size), float(deg[idx].mean()),
                              float(cent[idx].mean()), float(clus[idx].mean())))
    return out


def edge_sign_proportions(theta: SymmetricParams, groups: GroupLabels) -> dict:
    """Share of all edges that are positive/negative within and between groups.

    Keys of ``"blocks"`` are ``"g"`` for within-group cells and ``"g|h"`` for
    between-group cells (groups in first-appearance order).
    """
    groups.check(theta.p)
    labels = list(groups.groups())
    pos = {g: i for i, g in enumerate(labels)}
    gid = np.array([pos[g] for g in groups.assignment])
    rows, cols = packed_indices(theta.p)
    off = rows != cols
    vals = theta.entries[off]
    gr, gc = gid[rows[off]], gid[cols[off]]
    total = int(np.count_nonzero(vals))
    blocks = {}
    for a in range(len(labels)):
        for b in range(a, len(labels)):
            in_block = ((gr == a) & (gc == b)) | ((gr == b) & (gc == a))
            key = str(labels[a]) if a == b else f"{labels[a]}|{labels[b]}"
            n_pos = int(np.sum(in_block & (vals > 0)))
            n_neg = int(np.sum(in_block & (vals < 0)))
            blocks[key] = {
                "positive": n_pos / total if total else 0.0,
                "negative": n_neg / total if total else 0.0,
                "positive_count": n_pos,
                "negative_count": n_neg,
            }
    return {"total_edges": total, "empty": total == 0, "blocks": blocks}


# -- identifiability diagnostic -----------------------------------------------

@dataclass(frozen=True)
class KappaEstimate:
    kappa: float
    std_error: float
    forward: float        # E_{theta2}[phi(theta1, X) - phi(theta2, X)]
    backward: float       # E_{theta1}[phi(theta2, X) - phi(theta1, X)]
    forward_se: float
    backward_se: float
    n: int


def estimate_kappa_mc(spec: ModelSpec, theta1: SymmetricParams, theta2: SymmetricParams,
                      n: int, seed=None, sampler: SamplerOptions = SamplerOptions()) -> KappaEstimate:
    """Monte Carlo estimate of the smaller of the two expected pseudo-likelihood gaps.

    Each expectation uses ``n`` Gibbs draws from the respective law; the
    standard error is the naive ``std / sqrt(n)`` of the thinned draws.
    """
    if n < 1:
        raise MRFError("n must be >= 1")
    X2 = gibbs_sample(spec, theta2, n, sampler.burn_in, sampler.thin, child_seed(seed, 0))
    X1 = gibbs_sample(spec, theta1, n, sampler.burn_in, sampler.thin, child_seed(seed, 1))
    fwd = phi_rows(spec, theta1, X2) - phi_rows(spec, theta2, X2)
    bwd = phi_rows(spec, theta2, X1) - phi_rows(spec, theta1, X1)
    m1, m2 = float(fwd.mean()), float(bwd.mean())
    s1 = float(fwd.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    s2 = float(bwd.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    if m1 <= m2:
        return KappaEstimate(m1, s1, m1, m2, s1, s2, n)
    return KappaEstimate(m2, s2, m1, m2, s1, s2, n)
