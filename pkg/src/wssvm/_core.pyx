# cython: language_level=3
"""Compiled hot loops: sparse dots, kernel rows, and the pairwise sweeps of
the working-set subproblem.  ``_pycore`` mirrors every function here."""

from libc.math cimport exp, tanh
from libc.stdlib cimport calloc, free

import numpy as np

ctypedef Py_ssize_t idx_t

cdef enum:
    LINEAR = 0
    POLYNOMIAL = 1
    RBF = 2
    SIGMOID = 3


cdef inline double ipow(double base, int n) noexcept nogil:
    cdef double result = 1.0
    while n > 0:
        if n & 1:
            result *= base
        n >>= 1
        if n:
            base *= base
    return result


cdef inline double finish(double dot, double sq_a, double sq_b, int kind,
                          double gamma, double coef0, int degree) noexcept nogil:
    cdef double d2
    if kind == LINEAR:
        return dot
    if kind == POLYNOMIAL:
        return ipow(gamma * dot + coef0, degree)
    if kind == RBF:
        d2 = sq_a + sq_b - 2.0 * dot
        if d2 < 0.0:
            d2 = 0.0
        return exp(-gamma * d2)
    return tanh(gamma * dot + coef0)


def sparse_dot(const idx_t[:] ai, const double[:] av, const idx_t[:] bi, const double[:] bv):
    cdef idx_t p = 0, q = 0, na = ai.shape[0], nb = bi.shape[0]
    cdef double s = 0.0
    with nogil:
        while p < na and q < nb:
            if ai[p] == bi[q]:
                s += av[p] * bv[q]
                p += 1
                q += 1
            elif ai[p] < bi[q]:
                p += 1
            else:
                q += 1
    return s


def row_sq_norms(const idx_t[:] indptr, const idx_t[:] indices, const double[:] data):
    cdef idx_t n = indptr.shape[0] - 1, i, k
    cdef double s
    out = np.zeros(max(n, 0))
    cdef double[:] o = out
    with nogil:
        for i in range(n):
            s = 0.0
            for k in range(indptr[i], indptr[i + 1]):
                s += data[k] * data[k]
            o[i] = s
    return out


def kernel_value(const idx_t[:] ai, const double[:] av, double sq_a,
                 const idx_t[:] bi, const double[:] bv, double sq_b,
                 int kind, double gamma, double coef0, int degree):
    return finish(sparse_dot(ai, av, bi, bv), sq_a, sq_b, kind, gamma, coef0, degree)


def kernel_row(const idx_t[:] qi, const double[:] qv, double q_sq,
               const idx_t[:] indptr, const idx_t[:] indices, const double[:] data,
               const double[:] sq_norms, const idx_t[:] targets,
               int kind, double gamma, double coef0, int degree, idx_t n_cols,
               double[:] out):
    """K(query, x_t) for every t in ``targets``, written into ``out``.

    The query is scattered into a dense buffer and each target row is
    gathered in its own column order; the summation order equals a sorted
    two-pointer merge, so entries match :func:`kernel_value` bit for bit.
    """
    cdef idx_t nt = targets.shape[0], t, r, k, nq = qi.shape[0]
    cdef double s
    cdef double *dense = <double *> calloc(n_cols if n_cols > 0 else 1, sizeof(double))
    cdef unsigned char *mask = <unsigned char *> calloc(n_cols if n_cols > 0 else 1, 1)
    if dense == NULL or mask == NULL:
        free(dense)
        free(mask)
        raise MemoryError()
    try:
        with nogil:
            for k in range(nq):
                dense[qi[k]] = qv[k]
                mask[qi[k]] = 1
            for t in range(nt):
                r = targets[t]
                s = 0.0
                for k in range(indptr[r], indptr[r + 1]):
                    if mask[indices[k]]:
                        s += data[k] * dense[indices[k]]
                out[t] = finish(s, q_sq, sq_norms[r], kind, gamma, coef0, degree)
    finally:
        free(dense)
        free(mask)


def pair_sweeps(double[:, :] Q, double[:] G, double[:] alpha, const double[:] y,
                double C, double inner_tol, int max_sweeps, double eta_floor):
    """Gauss-Seidel sweeps of exact two-variable steps over the block.

    ``alpha`` and ``G`` (the block's gradient) are updated in place.
    Returns (sweeps run, total objective decrease).
    """
    cdef idx_t n = Q.shape[0], a, b, k
    cdef int sweep = 0
    cdef double best, total = 0.0, ya, yb, va, vb, diff, eta, ua, ub, t, gain
    cdef double na, nb, da, db
    cdef bint hit_a, hit_b
    with nogil:
        while sweep < max_sweeps:
            sweep += 1
            best = 0.0
            for a in range(n):
                ya = y[a]
                if not ((ya > 0 and alpha[a] < C) or (ya < 0 and alpha[a] > 0)):
                    continue
                for b in range(n):
                    if b == a:
                        continue
                    ya = y[a]
                    if not ((ya > 0 and alpha[a] < C) or (ya < 0 and alpha[a] > 0)):
                        break
                    yb = y[b]
                    if not ((yb > 0 and alpha[b] > 0) or (yb < 0 and alpha[b] < C)):
                        continue
                    va = -ya * G[a]
                    vb = -yb * G[b]
                    diff = va - vb
                    if diff <= 0.0:
                        continue
                    eta = Q[a, a] + Q[b, b] - 2.0 * ya * yb * Q[a, b]
                    ua = C - alpha[a] if ya > 0 else alpha[a]
                    ub = alpha[b] if yb > 0 else C - alpha[b]
                    if eta > eta_floor and diff / eta < ua and diff / eta < ub:
                        t = diff / eta
                        hit_a = False
                        hit_b = False
                    elif ua <= ub:
                        t = ua
                        hit_a = True
                        hit_b = ua == ub
                    else:
                        t = ub
                        hit_a = False
                        hit_b = True
                    gain = t * diff - 0.5 * eta * t * t
                    if gain <= 0.0:
                        continue
                    if hit_a:
                        na = C if ya > 0 else 0.0
                    else:
                        na = alpha[a] + ya * t
                    if hit_b:
                        nb = 0.0 if yb > 0 else C
                    else:
                        nb = alpha[b] - yb * t
                    da = na - alpha[a]
                    db = nb - alpha[b]
                    alpha[a] = na
                    alpha[b] = nb
                    for k in range(n):
                        G[k] += Q[k, a] * da + Q[k, b] * db
                    total += gain
                    if gain > best:
                        best = gain
            if best < inner_tol:
                break
    return sweep, total


def seq_dot(const double[:] a, const double[:] b):
    """Σ a_k b_k accumulated strictly left to right."""
    cdef idx_t k, n = a.shape[0]
    cdef double s = 0.0
    with nogil:
        for k in range(n):
            s += a[k] * b[k]
    return s
