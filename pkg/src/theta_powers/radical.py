"""Integer combinations of d-th roots over a multiplicative basis.

The basis for ``(d, xi)`` is every product of the first ``xi`` primes with
exponents below ``d``, except 1.  A :class:`RadicalSum` is an integer
coefficient vector over that basis minus an integer offset.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import product
from typing import Mapping

import gmpy2
import numpy as np

from . import kernels
from .caps import BASIS_CAP, ENUM_CAP, CapExceeded
from .certreal import (
    DEFAULT_PREC,
    PREC_CAP,
    CertReal,
    Undecided,
    compare,
    BoundVerdict,
    cr_floor,
    cr_root,
    dist_nearest_int,
    refine,
)
from .exact import SumForm, certified_argmin, sum_form

_MASK = (1 << 64) - 1


def first_primes(count: int) -> tuple[int, ...]:
    out, p = [], 1
    for _ in range(count):
        p = int(gmpy2.next_prime(p))
        out.append(p)
    return tuple(out)


@dataclass(frozen=True)
class RadicalBasis:
    d: int
    xi: int
    primes: tuple[int, ...]
    elements: tuple[int, ...]

    @property
    def size(self) -> int:
        return len(self.elements)

    @property
    def modulus(self) -> int:
        """Product of p**(d-1); every element divides it."""
        return math.prod(p ** (self.d - 1) for p in self.primes)


def build_basis(d: int, xi: int, cap: int = BASIS_CAP) -> RadicalBasis:
    if d < 2 or xi < 1:
        raise ValueError("need d >= 2 and xi >= 1")
    if d**xi > cap:
        raise CapExceeded(f"d**xi = {d**xi} exceeds the basis cap {cap}")
    primes = first_primes(xi)
    elems = sorted(
        math.prod(p**e for p, e in zip(primes, exps))
        for exps in product(range(d), repeat=xi)
        if any(exps)
    )
    return RadicalBasis(d, xi, primes, tuple(elems))


@lru_cache(maxsize=4096)
def root_cr(f: int, d: int, prec: int) -> CertReal:
    return cr_root(CertReal.exact(f, prec), d)


def frac64(f: int, d: int) -> int:
    """``floor(frac(f**(1/d)) * 2**64)`` exactly."""
    r, _ = gmpy2.iroot(gmpy2.mpz(f) << (64 * d), d)
    return int(r) & _MASK


@lru_cache(maxsize=256)
def _basis_fracs(basis: RadicalBasis) -> np.ndarray:
    return np.array([frac64(f, basis.d) for f in basis.elements], dtype=np.uint64)


@dataclass(frozen=True)
class RadicalSum:
    """``sum c_f * f**(1/d) - offset`` with ``coeffs`` aligned to ``basis.elements``."""

    basis: RadicalBasis
    coeffs: tuple[int, ...]
    offset: int = 0

    @staticmethod
    def from_map(basis: RadicalBasis, coeffs: Mapping[int, int], offset: int = 0) -> "RadicalSum":
        unknown = set(coeffs) - set(basis.elements)
        if unknown:
            raise ValueError(f"not basis elements: {sorted(unknown)}")
        return RadicalSum(basis, tuple(int(coeffs.get(f, 0)) for f in basis.elements), int(offset))

    @staticmethod
    def zero(basis: RadicalBasis) -> "RadicalSum":
        return RadicalSum(basis, (0,) * basis.size, 0)

    @property
    def coeff_map(self) -> dict[int, int]:
        return {f: c for f, c in zip(self.basis.elements, self.coeffs) if c}

    @property
    def height(self) -> int:
        return max((abs(c) for c in self.coeffs), default=0)

    @property
    def is_nonzero(self) -> bool:
        return any(self.coeffs)

    def __add__(self, other: "RadicalSum") -> "RadicalSum":
        return RadicalSum(
            self.basis, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)), self.offset + other.offset
        )

    def __neg__(self) -> "RadicalSum":
        return RadicalSum(self.basis, tuple(-c for c in self.coeffs), -self.offset)

    def __sub__(self, other: "RadicalSum") -> "RadicalSum":
        return self + (-other)

    def scale(self, k: int) -> "RadicalSum":
        return RadicalSum(self.basis, tuple(k * c for c in self.coeffs), k * self.offset)

    def shift_offset(self, delta: int) -> "RadicalSum":
        return RadicalSum(self.basis, self.coeffs, self.offset + delta)

    def value(self, prec: int = DEFAULT_PREC) -> CertReal:
        return eval_radical_sum(self, prec)

    def form(self) -> SumForm:
        f = sum_form(self.basis.elements, Fraction(1, self.basis.d), self.coeffs)
        return SumForm(f.rational - self.offset, f.radicals)


def eval_radical_sum(w: RadicalSum, prec: int = DEFAULT_PREC) -> CertReal:
    """Certified value of ``sum c_f f**(1/d) - offset``."""
    acc = CertReal.exact(-w.offset, prec)
    for f, c in zip(w.basis.elements, w.coeffs):
        if c:
            acc = acc + root_cr(f, w.basis.d, prec) * c
    return acc


def sort_precision(basis: RadicalBasis, n: int) -> int:
    return max(DEFAULT_PREC, 64 + basis.d**basis.xi * math.ceil(math.log2(max(n, 2))))


def _decode(index: int, lo: int, width: int, dims: int) -> list[int]:
    out = [0] * dims
    for i in range(dims - 1, -1, -1):
        index, r = divmod(index, width)
        out[i] = lo + r
    return out


def _certify_fracpart(w: RadicalSum, start: int, cap: int) -> RadicalSum:
    """Fold ``floor(value)`` into the offset."""
    return w.shift_offset(refine(lambda p: cr_floor(eval_radical_sum(w, p)), start, cap))


@lru_cache(maxsize=512)
def find_small_fracpart(
    basis: RadicalBasis, n: int, enum_cap: int = ENUM_CAP, prec_cap: int = PREC_CAP
) -> RadicalSum:
    """Nonzero w with height at most n and ``0 < value(w) <= n**(1 - d**xi)``.

    Pigeonhole on the circle: the (n+1)**D points ``sum c_f frac(f**(1/d))``
    with ``c in {0..n}**D`` leave some adjacent pair closer than
    ``(n+1)**-D``; the difference of that pair is returned with its integer
    part folded into ``offset``.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    D = basis.size
    total = (n + 1) ** D
    if total > enum_cap:
        raise CapExceeded(f"{total} coefficient vectors exceed the enumeration cap {enum_cap}")
    bound = Fraction(1, n**D)
    prec = sort_precision(basis, n)
    F = _basis_fracs(basis)
    vals = kernels.lattice_fracs(F, np.zeros(D, dtype=np.int64), np.full(D, n, dtype=np.int64))
    order = np.argsort(vals, kind="stable")
    sv = vals[order]
    with np.errstate(over="ignore"):
        gaps = np.empty_like(sv)
        gaps[:-1] = sv[1:] - sv[:-1]
        gaps[-1] = sv[0] - sv[-1]
    for i in np.argsort(gaps, kind="stable")[:64]:
        lower = int(order[i])
        upper = int(order[(i + 1) % len(order)])
        diff = [a - b for a, b in zip(_decode(upper, 0, n + 1, D), _decode(lower, 0, n + 1, D))]
        if not any(diff):
            continue
        try:
            w = _certify_fracpart(RadicalSum(basis, tuple(diff), 0), prec, prec_cap)
            v = eval_radical_sum(w, prec)
        except Undecided:
            continue
        if v.positive() and compare(v, bound) is BoundVerdict.LE:
            return w
    raise Undecided("no screened pair certified below the pigeonhole bound")


def _canonical_sign(coeffs: tuple[int, ...]) -> tuple[int, ...]:
    for c in coeffs:
        if c:
            return coeffs if c > 0 else tuple(-x for x in coeffs)
    return coeffs


def min_nonzero_dist_oracle(
    basis: RadicalBasis, n: int, enum_cap: int = ENUM_CAP, prec: int | None = None, prec_cap: int = PREC_CAP
) -> tuple[RadicalSum, CertReal]:
    """Exact minimiser of ``||w||`` over nonzero w of height at most n.

    The sign is normalised so the first nonzero coefficient is positive and
    the offset is the nearest integer, so ``|value(w)|`` is the distance.
    """
    if n < 1:
        raise ValueError("n must be positive")
    D = basis.size
    total = (2 * n + 1) ** D
    if total > enum_cap:
        raise CapExceeded(f"{total} coefficient vectors exceed the enumeration cap {enum_cap}")
    prec = prec or sort_precision(basis, n)
    F = _basis_fracs(basis)
    vals = kernels.lattice_fracs(F, np.full(D, -n, dtype=np.int64), np.full(D, n, dtype=np.int64))
    dist = kernels.circ_dist(vals)
    centre = (total - 1) // 2
    dist[centre] = np.uint64(1 << 63)
    best = int(dist.min())
    slack = 2 * (D * n + 2)
    hits = np.nonzero(dist <= np.uint64(min(best + slack, 1 << 63)))[0]
    cands = sorted({_canonical_sign(tuple(_decode(int(i), -n, 2 * n + 1, D))) for i in hits if int(i) != centre})

    def evaluate(c: tuple[int, ...], p: int) -> CertReal:
        return dist_nearest_int(eval_radical_sum(RadicalSum(basis, c, 0), p)).distance

    winners, _ = certified_argmin(cands, evaluate, lambda a, b: a == b, prec, prec_cap)
    coeffs = max(winners)
    raw = RadicalSum(basis, coeffs, 0)
    nearest = refine(lambda p: _nearest(eval_radical_sum(raw, p)), prec, prec_cap)
    w = raw.shift_offset(nearest)
    return w, dist_nearest_int(eval_radical_sum(w, prec)).distance


def _nearest(v: CertReal) -> int:
    r = dist_nearest_int(v)
    if r.nearest is None:
        raise Undecided("nearest integer ambiguous", v.prec)
    return r.nearest
