"""Exact integer arithmetic behind the certified decisions.

Rational exponents make many questions decidable without intervals: for
``theta = p/q`` the comparison ``m <= y**theta`` is ``m**q <= y**p``, and
``a**theta`` for an integer ``a`` has a canonical radical form
``c * (prod p_i**r_i)**(1/q)`` with ``0 <= r_i < q``.  Distinct forms of the
latter kind are linearly independent over the rationals, so two sums of such
terms are equal exactly when their forms agree.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Iterable, Sequence, TypeVar

import gmpy2
from gmpy2 import mpz

from .certreal import (
    DEFAULT_PREC,
    PREC_CAP,
    CertReal,
    Undecided,
    cr_ceil,
    cr_floor,
    cr_pow,
    floor_int,
    parse_rational,
    refine,
)

EXACT_BITS = 1 << 16
FACTOR_LIMIT = 10**12

C = TypeVar("C")

__all__ = [
    "TooLarge",
    "parse_rational",
    "frac_part",
    "rpow",
    "rpow_rational",
    "floor_rpow",
    "ceil_rpow",
    "factor",
    "radical_form",
    "SumForm",
    "sum_form",
    "same_distance",
    "certified_argmin",
]


class TooLarge(ArithmeticError):
    """An exact computation would exceed the size guard."""


def frac_part(q: Fraction) -> Fraction:
    return q - (q.numerator // q.denominator)


def rpow(y: Fraction | int, theta: Fraction, prec: int = DEFAULT_PREC) -> CertReal:
    """Certified ``y**theta`` for exact positive ``y``."""
    return cr_pow(CertReal.exact(Fraction(y), prec), CertReal.exact(theta, prec))


def _powers(y: Fraction, theta: Fraction, m: int) -> tuple[mpz, mpz]:
    """(A**p, m**q * B**p) where y = A/B, theta = p/q; compares y**theta with m."""
    p, q = theta.numerator, theta.denominator
    a, b = y.numerator, y.denominator
    cost = p * (a.bit_length() + b.bit_length()) + q * max(1, int(m).bit_length())
    if cost > EXACT_BITS:
        raise TooLarge("exact power comparison too large")
    return mpz(a) ** p, mpz(m) ** q * mpz(b) ** p


def _ge(y: Fraction, theta: Fraction, m: int) -> bool:
    """``y**theta >= m`` for y > 0, theta > 0."""
    if m <= 0:
        return True
    lhs, rhs = _powers(y, theta, m)
    return lhs >= rhs


def rpow_rational(y: Fraction | int, theta: Fraction) -> Fraction | None:
    """``y**theta`` when it is rational, else None; raises TooLarge past the size guard."""
    y = Fraction(y)
    if y == 0:
        return Fraction(0)
    if theta < 0:
        return rpow_rational(1 / y, -theta)
    p, q = theta.numerator, theta.denominator
    if p * (y.numerator.bit_length() + y.denominator.bit_length()) > EXACT_BITS:
        raise TooLarge("exact rational power too large")
    num, ok1 = gmpy2.iroot(mpz(y.numerator) ** p, q)
    if not ok1:
        return None
    den, ok2 = gmpy2.iroot(mpz(y.denominator) ** p, q)
    if not ok2:
        return None
    return Fraction(int(num), int(den))


def _rounded_rpow(y: Fraction, theta: Fraction, start: int, cap: int, up: bool) -> int:
    y = Fraction(y)
    if y < 0 or theta <= 0:
        raise ValueError("needs y >= 0 and theta > 0")
    if y == 0:
        return 0

    def attempt(prec: int) -> int:
        v = rpow(y, theta, prec)
        try:
            return cr_ceil(v) if up else cr_floor(v)
        except Undecided:
            m = floor_int(v.mid)
            try:
                while not _ge(y, theta, m):
                    m -= 1
                while _ge(y, theta, m + 1):
                    m += 1
                if up:
                    lhs, rhs = _powers(y, theta, m)
                    return m if lhs == rhs else m + 1
                return m
            except TooLarge:
                raise Undecided("rational power sits too close to an integer", prec) from None

    return refine(attempt, start, cap)


def floor_rpow(y: Fraction | int, theta: Fraction, start: int = DEFAULT_PREC, cap: int = PREC_CAP) -> int:
    """Exact ``floor(y**theta)``."""
    return _rounded_rpow(Fraction(y), theta, start, cap, up=False)


def ceil_rpow(y: Fraction | int, theta: Fraction, start: int = DEFAULT_PREC, cap: int = PREC_CAP) -> int:
    """Exact ``ceil(y**theta)``."""
    return _rounded_rpow(Fraction(y), theta, start, cap, up=True)


@lru_cache(maxsize=65536)
def factor(a: int) -> tuple[tuple[int, int], ...]:
    """Prime factorisation by trial division (fine for the sizes used here)."""
    if a < 1:
        raise ValueError("factor needs a positive integer")
    if a > FACTOR_LIMIT:
        raise TooLarge("integer too large for trial division")
    out = []
    for p in (2, 3):
        e = 0
        while a % p == 0:
            a //= p
            e += 1
        if e:
            out.append((p, e))
    p = 5
    step = 2
    while p * p <= a:
        e = 0
        while a % p == 0:
            a //= p
            e += 1
        if e:
            out.append((p, e))
        p += step
        step = 6 - step
    if a > 1:
        out.append((a, 1))
    return tuple(out)


RadicalKey = tuple[tuple[int, int], ...]


def radical_form(a: int, theta: Fraction) -> tuple[int, RadicalKey]:
    """Write ``a**theta = c * key**(1/q)`` with ``q = theta.denominator``.

    ``key`` lists (prime, r) with ``0 < r < q``; the empty key means ``a**theta``
    is the integer ``c``.
    """
    if theta <= 0:
        raise ValueError("radical_form needs theta > 0")
    if a == 0:
        return 0, ()
    p, q = theta.numerator, theta.denominator
    c = 1
    key = []
    for prime, e in factor(a):
        whole, rest = divmod(p * e, q)
        c *= prime**whole
        if rest:
            key.append((prime, rest))
    return c, tuple(key)


@dataclass(frozen=True)
class SumForm:
    """Exact canonical form of ``sum a_i**theta``: rational part plus radical terms."""

    rational: Fraction
    radicals: tuple[tuple[RadicalKey, int], ...]

    @property
    def is_rational(self) -> bool:
        return not self.radicals

    def __sub__(self, other: "SumForm") -> "SumForm":
        return _combine(self, other, -1)

    def __add__(self, other: "SumForm") -> "SumForm":
        return _combine(self, other, 1)

    def near_integer_is_zero(self, alpha: Fraction = Fraction(0)) -> bool:
        """True when ``value - alpha`` is an exact integer."""
        return self.is_rational and (self.rational - alpha).denominator == 1


def _combine(x: SumForm, y: SumForm, sign: int) -> SumForm:
    acc: dict[RadicalKey, int] = defaultdict(int)
    for k, c in x.radicals:
        acc[k] += c
    for k, c in y.radicals:
        acc[k] += sign * c
    rad = tuple(sorted((k, c) for k, c in acc.items() if c))
    return SumForm(x.rational + sign * y.rational, rad)


def sum_form(terms: Iterable[int], theta: Fraction, coeffs: Iterable[int] | None = None) -> SumForm:
    """Canonical form of ``sum coeff_i * a_i**theta``."""
    terms = list(terms)
    coeffs = [1] * len(terms) if coeffs is None else list(coeffs)
    acc: dict[RadicalKey, int] = defaultdict(int)
    rational = Fraction(0)
    for a, w in zip(terms, coeffs):
        if w == 0:
            continue
        c, key = radical_form(a, theta)
        if key:
            acc[key] += w * c
        else:
            rational += w * c
    rad = tuple(sorted((k, c) for k, c in acc.items() if c))
    return SumForm(rational, rad)


def same_distance(s1: SumForm, s2: SumForm, alpha: Fraction) -> bool:
    """``||s1 - alpha|| == ||s2 - alpha||`` decided exactly."""
    d = s1 - s2
    if d.is_rational and d.rational.denominator == 1:
        return True
    t = s1 + s2
    return t.is_rational and (t.rational - 2 * alpha).denominator == 1


def certified_argmin(
    candidates: Sequence[C],
    evaluate: Callable[[C, int], CertReal],
    same_value: Callable[[C, C], bool],
    start: int = DEFAULT_PREC,
    cap: int = PREC_CAP,
) -> tuple[list[C], CertReal]:
    """All candidates attaining the certified minimum, plus its enclosure.

    Candidates whose intervals still overlap the leader are refined by doubling
    precision until they separate or ``same_value`` proves an exact tie.
    """
    if not candidates:
        raise ValueError("no candidates")
    alive = list(candidates)
    prec = start
    while True:
        vals = [evaluate(c, prec) for c in alive]
        best = min(range(len(alive)), key=lambda i: vals[i].hi)
        ceiling = vals[best].hi
        keep = [i for i in range(len(alive)) if vals[i].lo <= ceiling]
        leader = alive[best]
        tied = []
        for i in keep:
            try:
                ok = i == best or same_value(leader, alive[i])
            except ArithmeticError:
                ok = False
            tied.append(ok)
        if all(tied):
            return [alive[i] for i in keep], vals[best]
        if prec >= cap:
            raise Undecided("minimum not separable at the precision cap", prec)
        alive = [alive[i] for i in keep]
        prec = min(2 * prec, cap)
