# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled inner loops for the pseudo-likelihood and the Gibbs sampler.

Every routine works on alphabet indices: ``X`` holds codes in ``[0, A)``,
``b0`` is the node potential table of length ``A`` and ``bmat`` the ``A x A``
pair potential table.  ``W`` is the dense symmetric parameter matrix.
All loops run without the GIL so thread pools get real parallelism.
"""

from libc.math cimport exp, fabs, log, log1p
from libc.stdlib cimport malloc, free

import numpy as np


cdef inline double _logits(const int[:, ::1] X, Py_ssize_t t, Py_ssize_t j,
                           const double[:, ::1] W, const double[::1] b0,
                           const double[:, ::1] bmat, double* L) noexcept nogil:
    """Fill L[u] for node j of row t and return log-sum-exp of L."""
    cdef Py_ssize_t A = b0.shape[0]
    cdef Py_ssize_t p = W.shape[0]
    cdef Py_ssize_t u, k
    cdef double w, m, s
    cdef int xk
    for u in range(A):
        L[u] = W[j, j] * b0[u]
    for k in range(p):
        if k == j:
            continue
        w = W[j, k]
        if w == 0.0:
            continue
        xk = X[t, k]
        for u in range(A):
            L[u] += w * bmat[u, xk]
    m = L[0]
    for u in range(1, A):
        if L[u] > m:
            m = L[u]
    s = 0.0
    for u in range(A):
        s += exp(L[u] - m)
    return m + log(s)


cdef inline void _binary_delta(const int[:, ::1] X, Py_ssize_t t,
                               const double[:, ::1] bmat, double* delta,
                               Py_ssize_t p) noexcept nogil:
    cdef Py_ssize_t k
    cdef int xk
    for k in range(p):
        xk = X[t, k]
        delta[k] = bmat[1, xk] - bmat[0, xk]


cdef double _binary_loss_grad(const int[:, ::1] X, const double[:, ::1] W,
                              const double[::1] b0, const double[:, ::1] bmat,
                              double[:, ::1] G, double* rowphi, bint want_grad) noexcept nogil:
    """Two-symbol alphabets: only the logit difference eta = L(1) - L(0) matters."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t t, j, k
    cdef double db0 = b0[1] - b0[0]
    cdef double total = 0.0
    cdef double eta, r, acc, z, e, sp, sig
    cdef double* delta = <double*> malloc(p * sizeof(double))
    cdef const double* Wj
    cdef double* Gj
    if want_grad:
        for j in range(p):
            for k in range(p):
                G[j, k] = 0.0
    for t in range(n):
        _binary_delta(X, t, bmat, delta, p)
        acc = 0.0
        for j in range(p):
            Wj = &W[j, 0]
            eta = 0.0
            for k in range(p):
                eta += Wj[k] * delta[k]
            eta += Wj[j] * (db0 - delta[j])
            # one exp serves both log(1 + e^eta) and the sigmoid
            e = exp(-fabs(eta))
            sp = log1p(e)
            if eta > 0:
                sp += eta
                sig = 1.0 / (1.0 + e)
            else:
                sig = e / (1.0 + e)
            if X[t, j] == 1:
                z = sp - eta
                r = sig - 1.0
            else:
                z = sp
                r = sig
            acc += z
            if want_grad:
                # r = P(X_j = 1 | rest) - 1{x_j = 1}
                Gj = &G[j, 0]
                for k in range(p):
                    Gj[k] += r * delta[k]
                Gj[j] += r * (db0 - delta[j])
        total += acc
        if rowphi != NULL:
            rowphi[t] = acc
    free(delta)
    if want_grad:
        for j in range(p):
            for k in range(j):
                acc = G[j, k] + G[k, j]
                G[j, k] = acc
                G[k, j] = acc
    return total


def segment_loss(const int[:, ::1] X, const double[:, ::1] W,
                 const double[::1] b0, const double[:, ::1] bmat):
    """Sum over rows of the negative log-pseudo-likelihood."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t A = b0.shape[0]
    cdef Py_ssize_t t, j
    cdef double total = 0.0
    cdef double lse
    if A == 2:
        with nogil:
            total = _binary_loss_grad(X, W, b0, bmat, None, NULL, False)
        return total
    cdef double* L = <double*> malloc(A * sizeof(double))
    if L == NULL:
        raise MemoryError()
    with nogil:
        for t in range(n):
            for j in range(p):
                lse = _logits(X, t, j, W, b0, bmat, L)
                total += lse - L[X[t, j]]
    free(L)
    return total


def row_phi(const int[:, ::1] X, const double[:, ::1] W,
            const double[::1] b0, const double[:, ::1] bmat, double[::1] out):
    """Write phi(W, x_t) for every row into ``out``."""
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t A = b0.shape[0]
    cdef Py_ssize_t t, j
    cdef double acc, lse
    if A == 2 and n > 0:
        with nogil:
            _binary_loss_grad(X, W, b0, bmat, None, &out[0], False)
        return
    cdef double* L = <double*> malloc(A * sizeof(double))
    if L == NULL:
        raise MemoryError()
    with nogil:
        for t in range(n):
            acc = 0.0
            for j in range(p):
                lse = _logits(X, t, j, W, b0, bmat, L)
                acc += lse - L[X[t, j]]
            out[t] = acc
    free(L)


def segment_loss_grad(const int[:, ::1] X, const double[:, ::1] W,
                      const double[::1] b0, const double[:, ::1] bmat,
                      double[:, ::1] G):
    """Loss sum and its gradient with respect to the packed parameters.

    ``G`` is overwritten with the symmetric gradient; off-diagonal entries
    already carry both node-conditional contributions.
    """
    cdef Py_ssize_t n = X.shape[0]
    cdef Py_ssize_t p = X.shape[1]
    cdef Py_ssize_t A = b0.shape[0]
    cdef Py_ssize_t t, j, k, u
    cdef double total = 0.0
    cdef double lse, r, acc
    cdef int xj, xk
    if A == 2:
        with nogil:
            total = _binary_loss_grad(X, W, b0, bmat, G, NULL, True)
        return total
    cdef double* L = <double*> malloc(A * sizeof(double))
    cdef double* R = <double*> malloc(A * sizeof(double))
    if L == NULL or R == NULL:
        free(L)
        free(R)
        raise MemoryError()
    with nogil:
        for j in range(p):
            for k in range(p):
                G[j, k] = 0.0
        for t in range(n):
            for j in range(p):
                lse = _logits(X, t, j, W, b0, bmat, L)
                xj = X[t, j]
                total += lse - L[xj]
                acc = 0.0
                for u in range(A):
                    r = exp(L[u] - lse)
                    if u == xj:
                        r -= 1.0
                    R[u] = r
                    acc += r * b0[u]
                G[j, j] += acc
                # G[j, k] for k != j accumulates node j's share; folded below
                for k in range(p):
                    if k == j:
                        continue
                    xk = X[t, k]
                    acc = 0.0
                    for u in range(A):
                        acc += R[u] * bmat[u, xk]
                    G[j, k] += acc
        for j in range(p):
            for k in range(j):
                acc = G[j, k] + G[k, j]
                G[j, k] = acc
                G[k, j] = acc
    free(L)
    free(R)
    return total


def gibbs_sweeps(const double[:, ::1] W, const double[::1] b0,
                 const double[:, ::1] bmat, int[::1] state,
                 const double[:, ::1] uniforms, const Py_ssize_t[::1] record,
                 int[:, ::1] out):
    """Run ``uniforms.shape[0]`` systematic sweeps in place on ``state``.

    After sweep ``i`` the state is copied to ``out[record[i]]`` when
    ``record[i] >= 0``.  Site ``j`` of sweep ``i`` draws its new value by
    inverting the conditional CDF at ``uniforms[i, j]``.
    """
    cdef Py_ssize_t m = uniforms.shape[0]
    cdef Py_ssize_t p = W.shape[0]
    cdef Py_ssize_t A = b0.shape[0]
    cdef Py_ssize_t i, j, k, u, row
    cdef double lse, cum, target
    cdef int[:, ::1] S = np.asarray(state).reshape(1, p)
    cdef double* L = <double*> malloc(A * sizeof(double))
    if L == NULL:
        raise MemoryError()
    with nogil:
        for i in range(m):
            for j in range(p):
                lse = _logits(S, 0, j, W, b0, bmat, L)
                target = uniforms[i, j]
                cum = 0.0
                u = 0
                while u < A - 1:
                    cum += exp(L[u] - lse)
                    if target < cum:
                        break
                    u += 1
                S[0, j] = <int> u
            row = record[i]
            if row >= 0:
                for k in range(p):
                    out[row, k] = S[0, k]
    free(L)
