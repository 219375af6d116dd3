# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled scans over the binary cube.

Point ``t`` in ``[0, 2**n)`` encodes ``x_i = (t >> (n - 1 - i)) & 1`` so that
increasing ``t`` is lexicographic order on ``(x_1, ..., x_n)``.
"""

import numpy as np

from libc.math cimport fabs, INFINITY


cdef inline bint _feasible(const double[:, ::1] G, const double[::1] h,
                           long long t, int n, double tol) noexcept nogil:
    cdef Py_ssize_t r, i
    cdef double s
    for r in range(G.shape[0]):
        s = 0.0
        for i in range(n):
            if (t >> (n - 1 - i)) & 1:
                s += G[r, i]
        if s > h[r] + tol:
            return False
    return True


cdef inline double _min_affine(const double[:, ::1] P, const double[::1] p,
                               long long t, int n, double floor) noexcept nogil:
    # Returns the min over rows of P x + p, stopping early once it drops
    # to ``floor`` or below (the caller only needs values above ``floor``).
    cdef Py_ssize_t k, i
    cdef double s, v = INFINITY
    for k in range(P.shape[0]):
        s = p[k]
        for i in range(n):
            if (t >> (n - 1 - i)) & 1:
                s += P[k, i]
        if s < v:
            v = s
            if v <= floor:
                return v
    return v


cdef inline bint _all_at_least(const double[:, ::1] P, const double[::1] p,
                               long long t, int n, double cut) noexcept nogil:
    cdef Py_ssize_t k, i
    cdef double s
    for k in range(P.shape[0]):
        s = p[k]
        for i in range(n):
            if (t >> (n - 1 - i)) & 1:
                s += P[k, i]
        if s < cut:
            return False
    return True


def scan_max(const double[:, ::1] G, const double[::1] h,
             const double[:, ::1] P, const double[::1] p,
             int n, double tol, double rel_tie):
    """Maximise ``min_k (P x + p)_k`` over binary ``x`` with ``G x <= h + tol``.

    Returns ``(index, value, n_feasible)``; ``index`` is -1 when nothing is
    feasible. Among points within ``rel_tie * max(1, |value|)`` of the
    maximum, the lexicographically smallest is returned.
    """
    cdef long long t, total = (<long long> 1) << n
    cdef long long count = 0, best_t = -1
    cdef double best = -INFINITY, v, cut
    with nogil:
        for t in range(total):
            if not _feasible(G, h, t, n, tol):
                continue
            count += 1
            v = _min_affine(P, p, t, n, best)
            if v > best:
                best = v
                best_t = t
        if best_t >= 0:
            cut = best - rel_tie * (fabs(best) if fabs(best) > 1.0 else 1.0)
            for t in range(best_t + 1):
                if not _feasible(G, h, t, n, tol):
                    continue
                if _all_at_least(P, p, t, n, cut):
                    best_t = t
                    break
    return best_t, best, count


def feasible_mask(const double[:, ::1] G, const double[::1] h, int n, double tol):
    """Boolean mask over all ``2**n`` points of ``G x <= h + tol``."""
    cdef long long t, total = (<long long> 1) << n
    out = np.zeros(total, dtype=np.uint8)
    cdef unsigned char[::1] mv = out
    with nogil:
        for t in range(total):
            if _feasible(G, h, t, n, tol):
                mv[t] = 1
    return out.view(bool)
