"""Pure numpy implementations of the screening kernels.

Semantics match ``_ckernels`` exactly: fixed-point sums wrap modulo 2**64,
float sums are accumulated left to right in the same order, and all outputs
come back in the same enumeration order.
"""

from __future__ import annotations

from itertools import combinations_with_replacement

import numpy as np

_U64 = np.uint64
_HALF = np.uint64(1 << 63)


def circ_dist(v: np.ndarray) -> np.ndarray:
    """Distance to 0 on the circle of circumference 2**64."""
    v = np.asarray(v, dtype=_U64)
    return np.where(v <= _HALF, v, np.uint64(0) - v)


def lattice_fracs(F, lo, hi) -> np.ndarray:
    """``sum_i c_i * F[i] mod 2**64`` for every c with lo <= c <= hi, last coordinate fastest."""
    F = np.ascontiguousarray(F, dtype=_U64)
    lo = np.ascontiguousarray(lo, dtype=np.int64)
    hi = np.ascontiguousarray(hi, dtype=np.int64)
    acc = np.zeros(1, dtype=_U64)
    for i in range(F.shape[0]):
        if hi[i] < lo[i]:
            return np.zeros(0, dtype=_U64)
        coeff = np.arange(lo[i], hi[i] + 1, dtype=np.int64).astype(_U64)
        with np.errstate(over="ignore"):
            step = coeff * F[i]
            acc = (acc[:, None] + step[None, :]).ravel()
    return acc


def _multiset_blocks(F: np.ndarray, k: int):
    """Yield (prefix indices, last-index array, sums) covering all nondecreasing k-tuples."""
    n = F.shape[0]
    if k == 1:
        yield (), np.arange(n, dtype=np.int64), F.copy()
        return
    for prefix in combinations_with_replacement(range(n), k - 1):
        base = np.uint64(0)
        for i in prefix:
            base = np.uint64((int(base) + int(F[i])) & 0xFFFFFFFFFFFFFFFF)
        start = prefix[-1]
        with np.errstate(over="ignore"):
            sums = F[start:] + base
        yield prefix, np.arange(start, n, dtype=np.int64), sums


def multiset_best(F, k: int, target: int) -> int:
    """Least circular distance of a k-multiset sum of F to ``target``."""
    F = np.ascontiguousarray(F, dtype=_U64)
    t = np.uint64(target)
    best = None
    for _, _, sums in _multiset_blocks(F, k):
        with np.errstate(over="ignore"):
            d = int(circ_dist(sums - t).min())
        best = d if best is None else min(best, d)
    return int(best)


def multiset_collect(F, k: int, target: int, limit: int) -> np.ndarray:
    """Rows (0-based, nondecreasing) of every k-multiset within ``limit`` of ``target``."""
    F = np.ascontiguousarray(F, dtype=_U64)
    t = np.uint64(target)
    lim = np.uint64(limit)
    rows = []
    for prefix, last, sums in _multiset_blocks(F, k):
        with np.errstate(over="ignore"):
            hit = circ_dist(sums - t) <= lim
        for j in last[hit]:
            rows.append(prefix + (int(j),))
    return np.array(rows, dtype=np.int64).reshape(-1, k)


def power_sum_screen(pw, k: int, M: int, thr, margin: float, m_lo: int = 1) -> np.ndarray:
    """Tuples a_1 <= ... <= a_k = m (m_lo <= m <= M) with ``||sum pw[a_j]||`` screened below thr[m].

    A tuple passes when ``|s - rint(s)| <= thr[m] + margin * s``.
    """
    pw = np.ascontiguousarray(pw, dtype=np.float64)
    thr = np.ascontiguousarray(thr, dtype=np.float64)
    rows = []
    for m in range(m_lo, M + 1):
        if k == 1:
            s = pw[m]
            if abs(s - np.rint(s)) <= thr[m] + margin * s:
                rows.append((m,))
            continue
        for prefix in combinations_with_replacement(range(1, m + 1), k - 2):
            base = 0.0
            for a in prefix:
                base += pw[a]
            start = prefix[-1] if prefix else 1
            last = np.arange(start, m + 1)
            s = (base + pw[start : m + 1]) + pw[m]
            hit = np.abs(s - np.rint(s)) <= thr[m] + margin * s
            for a in last[hit]:
                rows.append(prefix + (int(a), m))
    return np.array(rows, dtype=np.int64).reshape(-1, k)


def vm_hits(table, omegas, thr: float) -> np.ndarray:
    """For each grid row g, whether some omega has ``||sum table[g, omega_j]|| <= thr``."""
    table = np.ascontiguousarray(table, dtype=np.float64)
    omegas = np.ascontiguousarray(omegas, dtype=np.int64)
    G = table.shape[0]
    out = np.zeros(G, dtype=np.uint8)
    if omegas.shape[0] == 0:
        return out
    chunk = max(1, (1 << 22) // max(1, omegas.shape[0]))
    for g0 in range(0, G, chunk):
        sub = table[g0 : g0 + chunk]
        s = sub[:, omegas[:, 0]]
        for j in range(1, omegas.shape[1]):
            s = s + sub[:, omegas[:, j]]
        out[g0 : g0 + chunk] = (np.abs(s - np.rint(s)) <= thr).any(axis=1)
    return out
