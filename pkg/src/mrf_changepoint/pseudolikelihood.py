"""Node conditionals, the negative log-pseudo-likelihood and its gradient."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .core import Dataset, ModelSpec, MRFError, SymmetricParams, check_range


@dataclass(frozen=True)
class SegmentObjective:
    value: float
    range: tuple[int, int]
    scale_T: int


def _as_codes(spec: ModelSpec, x, p: int) -> np.ndarray:
    x = np.ascontiguousarray(np.asarray(x, dtype=np.int32).reshape(1, -1))
    if x.shape[1] != p:
        raise MRFError(f"observation has {x.shape[1]} entries, expected {p}")
    if x.min() < 0 or x.max() >= spec.size:
        raise MRFError("observation contains codes outside the alphabet")
    return x


def node_logits(spec: ModelSpec, theta: SymmetricParams, x, j: int) -> np.ndarray:
    """``L(u) = theta_jj b0(u) + sum_{k != j} theta_jk b(u, x_k)`` for every code u."""
    if not 0 <= j < theta.p:
        raise MRFError(f"node index {j} outside [0, {theta.p})")
    x = _as_codes(spec, x, theta.p)[0]
    W = theta.dense()
    row = W[j].copy()
    row[j] = 0.0
    logits = W[j, j] * spec.b0_table + spec.b_table[:, x] @ row
    if not np.all(np.isfinite(logits)):
        raise MRFError("non-finite conditional logit")
    return logits


def node_conditional(spec: ModelSpec, theta: SymmetricParams, x, j: int) -> np.ndarray:
    """Conditional law of node ``j`` given the others, as a vector over the alphabet."""
    logits = node_logits(spec, theta, x, j)
    z = logits - logits.max()
    w = np.exp(z)
    return w / w.sum()


def phi(spec: ModelSpec, theta: SymmetricParams, x) -> float:
    """Negative log-pseudo-likelihood of one observation."""
    X = _as_codes(spec, x, theta.p)
    return kernels.segment_loss(X, theta.dense(), spec.b0_table, spec.b_table)


def phi_rows(spec: ModelSpec, theta: SymmetricParams, X) -> np.ndarray:
    """``phi`` for every row of a code matrix."""
    X = np.ascontiguousarray(X, dtype=np.int32)
    out = np.empty(X.shape[0])
    kernels.row_phi(X, theta.dense(), spec.b0_table, spec.b_table, out)
    return out


def phi_gradient(spec: ModelSpec, theta: SymmetricParams, x) -> SymmetricParams:
    """Gradient of :func:`phi` with respect to the ``p(p+1)/2`` free parameters.

    Off-diagonal coordinates collect the contributions of both node
    conditionals that contain ``theta_jk``.
    """
    X = _as_codes(spec, x, theta.p)
    G = np.empty((theta.p, theta.p))
    kernels.segment_loss_grad(X, theta.dense(), spec.b0_table, spec.b_table, G)
    return SymmetricParams.from_dense(G, check_symmetric=False)


def segment_objective(spec: ModelSpec, theta: SymmetricParams, data: Dataset,
                      range: tuple[int, int], scale_T: int) -> SegmentObjective:
    """``(1/scale_T) * sum_{t in range} phi(theta, x_t)`` over a 1-based inclusive range."""
    start, end = range
    check_range(start, end, data.T)
    if scale_T <= 0:
        raise MRFError("scale_T must be positive")
    total = kernels.segment_loss(data.rows(start, end), theta.dense(),
                                 spec.b0_table, spec.b_table)
    return SegmentObjective(total / scale_T, (start, end), scale_T)
