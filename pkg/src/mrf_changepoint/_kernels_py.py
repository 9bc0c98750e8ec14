"""Pure numpy versions of the compiled kernels.

Signatures and outputs match ``_kernels.pyx`` exactly; the only expected
difference is floating-point rounding order.
"""

import numpy as np


def _all_logits(X, W, b0, bmat):
    # F[t, k, u] = b(u, x_tk)
    F = bmat.T[X]
    off = W - np.diag(np.diag(W))
    L = np.einsum("jk,tku->tju", off, F)
    L += np.diag(W)[None, :, None] * b0[None, None, :]
    return L, F


def _lse(L):
    m = L.max(axis=-1, keepdims=True)
    return (m + np.log(np.exp(L - m).sum(axis=-1, keepdims=True)))[..., 0]


def _observed(L, X):
    return np.take_along_axis(L, X[..., None], axis=-1)[..., 0]


def segment_loss(X, W, b0, bmat):
    X = np.asarray(X)
    if X.shape[0] == 0:
        return 0.0
    L, _ = _all_logits(X, np.asarray(W), np.asarray(b0), np.asarray(bmat))
    return float((_lse(L) - _observed(L, X)).sum())


def row_phi(X, W, b0, bmat, out):
    X = np.asarray(X)
    if X.shape[0] == 0:
        return
    L, _ = _all_logits(X, np.asarray(W), np.asarray(b0), np.asarray(bmat))
    out[:] = (_lse(L) - _observed(L, X)).sum(axis=1)


def segment_loss_grad(X, W, b0, bmat, G):
    X = np.asarray(X)
    b0 = np.asarray(b0)
    n, p = X.shape
    if n == 0:
        G[:] = 0.0
        return 0.0
    L, F = _all_logits(X, np.asarray(W), b0, np.asarray(bmat))
    lse = _lse(L)
    total = float((lse - _observed(L, X)).sum())
    R = np.exp(L - lse[..., None])
    np.put_along_axis(R, X[..., None], _observed(R, X)[..., None] - 1.0, axis=-1)
    M = np.einsum("tju,tku->jk", R, F)
    np.fill_diagonal(M, 0.0)
    G[:] = M + M.T
    G[np.diag_indices(p)] = (R * b0[None, None, :]).sum(axis=(0, 2))
    return total


def gibbs_sweeps(W, b0, bmat, state, uniforms, record, out):
    W = np.asarray(W)
    b0 = np.asarray(b0)
    bmat = np.asarray(bmat)
    p = W.shape[0]
    A = b0.shape[0]
    for i in range(uniforms.shape[0]):
        for j in range(p):
            L = W[j, j] * b0.copy()
            for k in range(p):
                if k != j and W[j, k] != 0.0:
                    L += W[j, k] * bmat[:, state[k]]
            m = L.max()
            lse = m + np.log(np.exp(L - m).sum())
            cdf = np.cumsum(np.exp(L[: A - 1] - lse))
            hits = np.nonzero(uniforms[i, j] < cdf)[0]
            state[j] = hits[0] if hits.size else A - 1
        if record[i] >= 0:
            out[record[i]] = state
