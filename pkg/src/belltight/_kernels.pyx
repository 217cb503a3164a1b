# cython: language_level=3
"""Compiled depth-first enumeration of party-count compositions.

The doubled Bell functional of a composition ``c`` (counts per deterministic
single-party strategy) is

    2 I(c) = sum_s c_s w2_s + S(c)^T A S(c),     S(c) = sum_s c_s s

so a node of the search tree only needs its partial ``S``, its partial linear
term and the number of parties still unassigned. Subtrees are cut when an
interval-arithmetic lower bound exceeds the incumbent.
"""

from libc.stdlib cimport free, malloc, realloc
from libc.math cimport fabs

import numpy as np
cimport cython

ctypedef fused num_t:
    long long
    double


cdef struct Ctx:
    int m
    int K
    long long N
    long long* strat    # K x m, entries +-1
    long long* smin     # K x m, min over strategies j..K-1 of s_k
    long long* smax     # K x m
    long long* S        # m
    long long* counts   # K
    double* lo          # m  scratch
    double* hi          # m  scratch
    # output buffer
    long long* out_counts
    double* out_vals
    Py_ssize_t n_out
    Py_ssize_t size_out
    Py_ssize_t cap
    int overflow
    int have_best
    double best
    int prune
    double rtol
    long long n_leaves
    long long n_pruned


cdef inline double _tol(double best, double rtol) noexcept nogil:
    if rtol == 0.0:
        return 0.0
    return rtol * (fabs(best) if fabs(best) > 1.0 else 1.0)


cdef int _compact(Ctx* c, double best) noexcept nogil:
    cdef Py_ssize_t i, t, w = 0
    cdef double tol = _tol(best, c.rtol)
    for i in range(c.n_out):
        if c.out_vals[i] <= best + tol:
            if w != i:
                c.out_vals[w] = c.out_vals[i]
                for t in range(c.K):
                    c.out_counts[w * c.K + t] = c.out_counts[i * c.K + t]
            w += 1
    c.n_out = w
    return 0


cdef int _record(Ctx* c, double val) noexcept nogil:
    cdef Py_ssize_t t, new_size
    cdef void* p
    if not c.have_best or val < c.best:
        c.best = val
        c.have_best = 1
    if val > c.best + _tol(c.best, c.rtol):
        return 0
    if c.n_out == c.size_out:
        _compact(c, c.best)
        if c.n_out * 2 > c.size_out:
            if c.size_out >= c.cap:
                c.overflow = 1
                return -1
            new_size = c.size_out * 2
            if new_size > c.cap:
                new_size = c.cap
            p = realloc(c.out_counts, new_size * c.K * sizeof(long long))
            if p == NULL:
                c.overflow = 1
                return -1
            c.out_counts = <long long*> p
            p = realloc(c.out_vals, new_size * sizeof(double))
            if p == NULL:
                c.overflow = 1
                return -1
            c.out_vals = <double*> p
            c.size_out = new_size
    for t in range(c.K):
        c.out_counts[c.n_out * c.K + t] = c.counts[t]
    c.out_vals[c.n_out] = val
    c.n_out += 1
    return 0


cdef num_t _quad(Ctx* c, num_t* A) noexcept nogil:
    cdef num_t q = 0
    cdef int k, l, m = c.m
    for k in range(m):
        for l in range(m):
            q += A[k * m + l] * c.S[k] * c.S[l]
    return q


cdef double _lower_bound(Ctx* c, num_t* A, num_t* minw, int j, long long r,
                         num_t lin) noexcept nogil:
    cdef int k, l, m = c.m
    cdef double lb = <double> lin + <double> r * <double> minw[j]
    cdef double a, x0, x1, t, v
    for k in range(m):
        c.lo[k] = <double> (c.S[k] + r * c.smin[j * m + k])
        c.hi[k] = <double> (c.S[k] + r * c.smax[j * m + k])
    for k in range(m):
        a = <double> A[k * m + k]
        x0 = c.lo[k] * c.lo[k]
        x1 = c.hi[k] * c.hi[k]
        if a >= 0:
            if c.lo[k] <= 0 and c.hi[k] >= 0:
                t = 0.0
            else:
                t = x0 if x0 < x1 else x1
        else:
            t = x0 if x0 > x1 else x1
        lb += a * t
        for l in range(k + 1, m):
            a = <double> A[k * m + l]
            if a == 0:
                continue
            t = a * c.lo[k] * c.lo[l]
            v = a * c.lo[k] * c.hi[l]
            if v < t:
                t = v
            v = a * c.hi[k] * c.lo[l]
            if v < t:
                t = v
            v = a * c.hi[k] * c.hi[l]
            if v < t:
                t = v
            lb += 2.0 * t
    return lb


cdef inline void _shift(Ctx* c, int j, long long times) noexcept nogil:
    cdef int k
    for k in range(c.m):
        c.S[k] += times * c.strat[j * c.m + k]


cdef void _dfs(Ctx* c, num_t* w2, num_t* A, num_t* minw,
               int j, long long r, num_t lin) noexcept nogil:
    cdef long long q
    cdef num_t val
    if c.overflow:
        return
    if j == c.K - 1:
        c.counts[j] = r
        _shift(c, j, r)
        val = lin + r * w2[j] + _quad(c, A)
        _shift(c, j, -r)
        c.n_leaves += 1
        _record(c, <double> val)
        return
    if c.prune and c.have_best:
        if _lower_bound(c, A, minw, j, r, lin) > c.best + _tol(c.best, c.rtol):
            c.n_pruned += 1
            return
    for q in range(r + 1):
        c.counts[j] = q
        _dfs(c, w2, A, minw, j + 1, r - q, lin + q * w2[j])
        if q < r:
            _shift(c, j, 1)
    _shift(c, j, -r)
    c.counts[j] = 0


def enumerate_min(num_t[::1] w2, num_t[:, ::1] A, long long[:, ::1] strat,
                  long long n_parties, long long c0_start=0, long long c0_step=1,
                  upper=None, double rtol=0.0, Py_ssize_t cap=1000000,
                  bint prune=True):
    """Minimum of the doubled functional over compositions and all compositions
    attaining it (within ``rtol`` relative tolerance).

    Only compositions whose first count lies in
    ``range(c0_start, n_parties + 1, c0_step)`` are visited, which lets callers
    split the search across workers.

    Returns ``(best, counts, values, n_leaves, n_pruned)``; ``best`` is None when
    no composition beat or matched ``upper``.
    """
    cdef int K = strat.shape[0]
    cdef int m = strat.shape[1]
    cdef int j, k
    cdef long long c0
    cdef Ctx c
    cdef num_t* minw
    cdef num_t* w2p = &w2[0]
    cdef num_t* Ap = &A[0, 0]

    if w2.shape[0] != K or A.shape[0] != m or A.shape[1] != m:
        raise ValueError("shape mismatch between weights, quadratic form and strategies")

    c.m = m
    c.K = K
    c.N = n_parties
    c.rtol = rtol
    c.prune = prune
    c.cap = cap if cap > 0 else 1
    c.overflow = 0
    c.n_out = 0
    c.size_out = 1024 if c.cap > 1024 else c.cap
    c.n_leaves = 0
    c.n_pruned = 0
    c.have_best = 0
    c.best = 0.0
    if upper is not None:
        c.best = float(upper)
        c.have_best = 1

    c.strat = <long long*> malloc(K * m * sizeof(long long))
    c.smin = <long long*> malloc(K * m * sizeof(long long))
    c.smax = <long long*> malloc(K * m * sizeof(long long))
    c.S = <long long*> malloc(m * sizeof(long long))
    c.counts = <long long*> malloc(K * sizeof(long long))
    c.lo = <double*> malloc(m * sizeof(double))
    c.hi = <double*> malloc(m * sizeof(double))
    c.out_counts = <long long*> malloc(c.size_out * K * sizeof(long long))
    c.out_vals = <double*> malloc(c.size_out * sizeof(double))
    minw = <num_t*> malloc(K * sizeof(num_t))
    try:
        for j in range(K):
            for k in range(m):
                c.strat[j * m + k] = strat[j, k]
        for j in range(K - 1, -1, -1):
            minw[j] = w2[j] if j == K - 1 or w2[j] < minw[j + 1] else minw[j + 1]
            for k in range(m):
                if j == K - 1:
                    c.smin[j * m + k] = strat[j, k]
                    c.smax[j * m + k] = strat[j, k]
                else:
                    c.smin[j * m + k] = min(strat[j, k], c.smin[(j + 1) * m + k])
                    c.smax[j * m + k] = max(strat[j, k], c.smax[(j + 1) * m + k])
        for k in range(m):
            c.S[k] = 0
        for j in range(K):
            c.counts[j] = 0

        with nogil:
            c0 = c0_start
            while c0 <= n_parties:
                c.counts[0] = c0
                _shift(&c, 0, c0)
                _dfs(&c, w2p, Ap, minw, 1, n_parties - c0, c0 * w2p[0])
                _shift(&c, 0, -c0)
                if c.overflow:
                    break
                c0 += c0_step
            _compact(&c, c.best)

        if c.overflow:
            raise OverflowError(f"more than {cap} saturating compositions")
        counts = np.empty((c.n_out, K), dtype=np.int64)
        vals = np.empty(c.n_out, dtype=np.float64)
        for j in range(c.n_out):
            vals[j] = c.out_vals[j]
            for k in range(K):
                counts[j, k] = c.out_counts[j * K + k]
        found = None
        if c.n_out > 0:
            found = int(c.best) if num_t is cython.longlong else c.best
        return found, counts, vals, c.n_leaves, c.n_pruned
    finally:
        free(c.strat)
        free(c.smin)
        free(c.smax)
        free(c.S)
        free(c.counts)
        free(c.lo)
        free(c.hi)
        free(c.out_counts)
        free(c.out_vals)
        free(minw)
