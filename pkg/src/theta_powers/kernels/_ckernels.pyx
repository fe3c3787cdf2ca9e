# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled screening kernels; see ``_pykernels`` for the reference semantics."""

import numpy as np
cimport numpy as cnp
from libc.math cimport fabs, rint
from libc.stdint cimport int64_t, uint64_t

cnp.import_array()

cdef uint64_t HALF = (<uint64_t>1) << 63


cdef inline uint64_t _circ(uint64_t v) noexcept nogil:
    return v if v <= HALF else (<uint64_t>0) - v


def circ_dist(v):
    return np.asarray(_py_circ(np.ascontiguousarray(v, dtype=np.uint64)))


cdef _py_circ(const uint64_t[::1] v):
    cdef Py_ssize_t i, n = v.shape[0]
    out = np.empty(n, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    for i in range(n):
        o[i] = _circ(v[i])
    return out


def lattice_fracs(F, lo, hi):
    cdef const uint64_t[::1] f = np.ascontiguousarray(F, dtype=np.uint64)
    cdef const int64_t[::1] l = np.ascontiguousarray(lo, dtype=np.int64)
    cdef const int64_t[::1] h = np.ascontiguousarray(hi, dtype=np.int64)
    cdef Py_ssize_t D = f.shape[0], i, idx, total = 1
    for i in range(D):
        if h[i] < l[i]:
            return np.zeros(0, dtype=np.uint64)
        total *= h[i] - l[i] + 1
    out = np.empty(total, dtype=np.uint64)
    cdef uint64_t[::1] o = out
    cdef int64_t[::1] c = np.array(l, dtype=np.int64)
    cdef uint64_t acc = 0
    for i in range(D):
        acc += (<uint64_t>c[i]) * f[i]
    with nogil:
        for idx in range(total):
            o[idx] = acc
            i = D - 1
            while i >= 0:
                if c[i] < h[i]:
                    c[i] += 1
                    acc += f[i]
                    break
                acc -= (<uint64_t>(h[i] - l[i])) * f[i]
                c[i] = l[i]
                i -= 1
    return out


cdef inline bint _advance(int64_t[::1] idx, Py_ssize_t k, Py_ssize_t n) noexcept nogil:
    """Next nondecreasing k-tuple over 0..n-1 in lexicographic order."""
    cdef Py_ssize_t j = k - 1, t
    while j >= 0 and idx[j] == n - 1:
        j -= 1
    if j < 0:
        return False
    idx[j] += 1
    for t in range(j + 1, k):
        idx[t] = idx[j]
    return True


cdef inline uint64_t _msum(const uint64_t[::1] f, int64_t[::1] idx, Py_ssize_t k) noexcept nogil:
    cdef uint64_t s = 0
    cdef Py_ssize_t j
    for j in range(k):
        s += f[idx[j]]
    return s


def multiset_best(F, int k, target):
    cdef const uint64_t[::1] f = np.ascontiguousarray(F, dtype=np.uint64)
    cdef Py_ssize_t n = f.shape[0]
    cdef uint64_t t = <uint64_t>int(target)
    cdef int64_t[::1] idx = np.zeros(k, dtype=np.int64)
    cdef uint64_t best = HALF, d
    with nogil:
        while True:
            d = _circ(_msum(f, idx, k) - t)
            if d < best:
                best = d
            if not _advance(idx, k, n):
                break
    return int(best)


def multiset_collect(F, int k, target, limit):
    cdef const uint64_t[::1] f = np.ascontiguousarray(F, dtype=np.uint64)
    cdef Py_ssize_t n = f.shape[0], count = 0, r = 0, j
    cdef uint64_t t = <uint64_t>int(target)
    cdef uint64_t lim = <uint64_t>int(limit)
    cdef int64_t[::1] idx = np.zeros(k, dtype=np.int64)
    with nogil:
        while True:
            if _circ(_msum(f, idx, k) - t) <= lim:
                count += 1
            if not _advance(idx, k, n):
                break
    out = np.empty((count, k), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    idx[:] = 0
    with nogil:
        while r < count:
            if _circ(_msum(f, idx, k) - t) <= lim:
                for j in range(k):
                    o[r, j] = idx[j]
                r += 1
            if not _advance(idx, k, n):
                break
    return out


cdef inline bint _advance_bounded(int64_t[::1] a, Py_ssize_t k1, int64_t m) noexcept nogil:
    """Next nondecreasing (k1)-tuple over 1..m."""
    cdef Py_ssize_t j = k1 - 1, t
    while j >= 0 and a[j] == m:
        j -= 1
    if j < 0:
        return False
    a[j] += 1
    for t in range(j + 1, k1):
        a[t] = a[j]
    return True


cdef Py_ssize_t _screen(const double[::1] pw, Py_ssize_t k, int64_t M, const double[::1] thr,
                        double margin, int64_t[:, ::1] o, bint fill, int64_t[::1] a, int64_t m_lo) noexcept nogil:
    cdef int64_t m
    cdef Py_ssize_t j, r = 0, k1 = k - 1
    cdef double s
    for m in range(m_lo, M + 1):
        for j in range(k1):
            a[j] = 1
        while True:
            s = 0.0
            for j in range(k1):
                s += pw[a[j]]
            s += pw[m]
            if fabs(s - rint(s)) <= thr[m] + margin * s:
                if fill:
                    for j in range(k1):
                        o[r, j] = a[j]
                    o[r, k1] = m
                r += 1
            if k1 == 0 or not _advance_bounded(a, k1, m):
                break
    return r


def power_sum_screen(pw, int k, long M, thr, double margin, long m_lo=1):
    cdef const double[::1] p = np.ascontiguousarray(pw, dtype=np.float64)
    cdef const double[::1] t = np.ascontiguousarray(thr, dtype=np.float64)
    cdef int64_t[:, ::1] dummy = np.zeros((1, k), dtype=np.int64)
    cdef int64_t[::1] a = np.ones(max(k - 1, 1), dtype=np.int64)
    cdef Py_ssize_t count
    with nogil:
        count = _screen(p, k, M, t, margin, dummy, False, a, m_lo)
    out = np.empty((count, k), dtype=np.int64)
    cdef int64_t[:, ::1] o = out
    if count:
        with nogil:
            _screen(p, k, M, t, margin, o, True, a, m_lo)
    return out


def vm_hits(table, omegas, double thr):
    cdef const double[:, ::1] tb = np.ascontiguousarray(table, dtype=np.float64)
    cdef const int64_t[:, ::1] om = np.ascontiguousarray(omegas, dtype=np.int64)
    cdef Py_ssize_t G = tb.shape[0], W = om.shape[0], K = om.shape[1], g, w, j
    cdef double s
    out = np.zeros(G, dtype=np.uint8)
    cdef cnp.uint8_t[::1] o = out
    with nogil:
        for g in range(G):
            for w in range(W):
                s = tb[g, om[w, 0]]
                for j in range(1, K):
                    s = s + tb[g, om[w, j]]
                if fabs(s - rint(s)) <= thr:
                    o[g] = 1
                    break
    return out
