"""Midpoint-radius certified reals on top of MPFR.

Every operation computes outward-rounded endpoints with MPFR's directed
rounding (through per-call ``gmpy2.context`` objects, so there is no global
state to race on) and then stores the exact midpoint of those endpoints
together with an upward-rounded radius.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Callable, TypeVar, Union

import gmpy2
from gmpy2 import mpfr, mpq, mpz

DEFAULT_PREC = 128
PREC_CAP = 65536
MIN_PREC = 32
_RAD_PREC = 64

T = TypeVar("T")


class CertRealError(ValueError):
    """Invalid input to a certified operation."""


class NotPositiveError(CertRealError):
    """The argument does not certify as strictly positive."""


class CertRealOverflow(CertRealError, OverflowError):
    """An endpoint left the representable exponent range."""


class Undecided(ArithmeticError):
    """A certified decision could not be reached at the current precision."""

    def __init__(self, message: str, prec: int | None = None):
        super().__init__(message)
        self.prec = prec


class BoundVerdict(enum.Enum):
    LE = "LE"
    GT = "GT"
    UNDECIDED = "UNDECIDED"


@lru_cache(maxsize=None)
def _ctx(prec: int, rnd: int) -> gmpy2.context:
    return gmpy2.context(
        precision=prec,
        round=rnd,
        emax=gmpy2.get_emax_max(),
        emin=gmpy2.get_emin_min(),
    )


_DOWN = gmpy2.RoundDown
_UP = gmpy2.RoundUp
_NEAR = gmpy2.RoundToNearest


def down(prec: int) -> gmpy2.context:
    return _ctx(prec, _DOWN)


def up(prec: int) -> gmpy2.context:
    return _ctx(prec, _UP)


def _exact_int(v: int) -> mpfr:
    v = mpz(v)
    return mpfr(v, max(MIN_PREC, v.bit_length() + 1))


def _same(v: mpfr) -> gmpy2.context:
    return _ctx(max(v.precision, MIN_PREC), _NEAR)


def neg(v: mpfr) -> mpfr:
    """Exact negation (plain ``-v`` would round to the thread's default precision)."""
    return _same(v).minus(v)


def fabs(v: mpfr) -> mpfr:
    return _same(v).abs(v)


def shift(v: mpfr, e: int) -> mpfr:
    """Exact ``v * 2**e``."""
    return _same(v).mul_2exp(v, e)


def floor_int(v) -> int:
    """Exact floor of a finite mpfr as a Python int."""
    f = int(v)
    return f - 1 if v < f else f


def ceil_int(v) -> int:
    f = int(v)
    return f + 1 if v > f else f


def round_int(v) -> int:
    """Nearest integer, halves rounded up."""
    f = floor_int(v)
    return f + 1 if v >= mpq(2 * f + 1, 2) else f


def to_fraction(v: mpfr) -> Fraction:
    """Exact value of a finite mpfr."""
    a, b = v.as_integer_ratio()
    return Fraction(int(a), int(b))


def _finite(*vals: mpfr) -> None:
    for v in vals:
        if not gmpy2.is_finite(v):
            raise CertRealOverflow("endpoint overflow: split the exponent into integer and fractional parts")


def parse_rational(text: str) -> Fraction:
    """Parse ``"0.5"``, ``"-7"``, ``"2.5e-1"`` or ``"p/q"`` exactly."""
    if not isinstance(text, str):
        raise CertRealError(f"expected a decimal or rational string, got {type(text).__name__}")
    s = text.strip()
    try:
        return Fraction(s)
    except ZeroDivisionError:
        raise CertRealError(f"zero denominator in {text!r}") from None
    except ValueError:
        raise CertRealError(f"malformed number {text!r}") from None


@dataclass(frozen=True, slots=True)
class CertReal:
    """The closed interval ``[mid - rad, mid + rad]``; ``prec`` is the working precision in bits."""

    mid: mpfr
    rad: mpfr
    prec: int

    # construction -----------------------------------------------------------
    @staticmethod
    def from_bounds(lo: mpfr, hi: mpfr, prec: int) -> "CertReal":
        _finite(lo, hi)
        if lo > hi:
            raise CertRealError("lower endpoint exceeds upper endpoint")
        if lo == hi:
            return CertReal(lo if lo != 0 else mpfr(0), mpfr(0), prec)
        wide = max(lo.precision, hi.precision) + 1
        mid = _ctx(wide, _NEAR).mul_2exp(_ctx(wide, _NEAR).add(lo, hi), -1)
        u = up(_RAD_PREC)
        rad = max(u.sub(hi, mid), u.sub(mid, lo))
        _finite(mid, rad)
        return CertReal(mid, rad, prec)

    @staticmethod
    def exact(value: Union[int, Fraction, mpz, mpq, mpfr], prec: int = DEFAULT_PREC) -> "CertReal":
        """Enclose an exact number; dyadic inputs get radius zero."""
        if isinstance(value, CertReal):
            return value
        if isinstance(value, bool):
            value = int(value)
        if isinstance(value, (int, type(mpz(0)))):
            return CertReal(_exact_int(value), mpfr(0), prec)
        if isinstance(value, type(mpfr(0))):
            _finite(value)
            return CertReal(value, mpfr(0), prec)
        if isinstance(value, (Fraction, type(mpq(0)))):
            p, q = mpz(value.numerator), mpz(value.denominator)
            if q & (q - 1) == 0:
                return CertReal(shift(_exact_int(p), -(q.bit_length() - 1)), mpfr(0), prec)
            return CertReal.from_bounds(down(prec).div(p, q), up(prec).div(p, q), prec)
        if isinstance(value, float):
            raise TypeError("binary floats are not accepted; pass a decimal string or Fraction")
        raise TypeError(f"cannot build CertReal from {type(value).__name__}")

    # endpoints --------------------------------------------------------------
    @property
    def lo(self) -> mpfr:
        if self.rad == 0:
            return self.mid
        return down(self.prec).sub(self.mid, self.rad)

    @property
    def hi(self) -> mpfr:
        if self.rad == 0:
            return self.mid
        return up(self.prec).add(self.mid, self.rad)

    @property
    def is_exact(self) -> bool:
        return self.rad == 0

    def with_prec(self, prec: int) -> "CertReal":
        return CertReal(self.mid, self.rad, prec)

    def width(self) -> mpfr:
        return shift(self.rad, 1)

    # predicates -------------------------------------------------------------
    def contains(self, value) -> bool:
        """True when the exact number ``value`` (or the whole interval) lies inside."""
        if isinstance(value, CertReal):
            return self.lo <= value.lo and value.hi <= self.hi
        if isinstance(value, Fraction):
            value = mpq(value.numerator, value.denominator)
        return bool(self.lo <= value <= self.hi)

    def intersects(self, other: "CertReal") -> bool:
        return bool(self.lo <= other.hi and other.lo <= self.hi)

    def sign(self) -> int | None:
        """Certified sign, or None when the interval straddles zero."""
        if self.rad == 0:
            return int(gmpy2.sign(self.mid))
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        return None

    def positive(self) -> bool:
        return bool(self.lo > 0)

    # arithmetic -------------------------------------------------------------
    def _coerce(self, other) -> "CertReal":
        if isinstance(other, CertReal):
            return other
        return CertReal.exact(other, self.prec)

    def __neg__(self) -> "CertReal":
        return CertReal(neg(self.mid), self.rad, self.prec)

    def __pos__(self) -> "CertReal":
        return self

    def __abs__(self) -> "CertReal":
        s = self.sign()
        if s is not None:
            return self if s >= 0 else -self
        return CertReal.from_bounds(mpfr(0), max(neg(self.lo), self.hi), self.prec)

    def __add__(self, other) -> "CertReal":
        o = self._coerce(other)
        p = max(self.prec, o.prec)
        return CertReal.from_bounds(down(p).add(self.lo, o.lo), up(p).add(self.hi, o.hi), p)

    __radd__ = __add__

    def __sub__(self, other) -> "CertReal":
        o = self._coerce(other)
        p = max(self.prec, o.prec)
        return CertReal.from_bounds(down(p).sub(self.lo, o.hi), up(p).sub(self.hi, o.lo), p)

    def __rsub__(self, other) -> "CertReal":
        return self._coerce(other) - self

    def __mul__(self, other) -> "CertReal":
        o = self._coerce(other)
        p = max(self.prec, o.prec)
        d, u = down(p), up(p)
        a = (self.lo, self.hi) if self.rad else (self.mid,)
        b = (o.lo, o.hi) if o.rad else (o.mid,)
        lo = min(d.mul(x, y) for x in a for y in b)
        hi = max(u.mul(x, y) for x in a for y in b)
        return CertReal.from_bounds(lo, hi, p)

    __rmul__ = __mul__

    def __truediv__(self, other) -> "CertReal":
        o = self._coerce(other)
        if o.sign() in (None, 0):
            raise CertRealError("division by an interval containing zero")
        p = max(self.prec, o.prec)
        d, u = down(p), up(p)
        a = (self.lo, self.hi) if self.rad else (self.mid,)
        b = (o.lo, o.hi) if o.rad else (o.mid,)
        lo = min(d.div(x, y) for x in a for y in b)
        hi = max(u.div(x, y) for x in a for y in b)
        return CertReal.from_bounds(lo, hi, p)

    def __rtruediv__(self, other) -> "CertReal":
        return self._coerce(other) / self

    def mul_2exp(self, e: int) -> "CertReal":
        """Exact scaling by ``2**e``."""
        return CertReal(shift(self.mid, e), shift(self.rad, e), self.prec)

    # formatting -------------------------------------------------------------
    def _digits(self) -> int:
        return max(20, int(self.prec * 0.30103) + 3)

    def lo_str(self, digits: int | None = None) -> str:
        return format(self.lo, f".{digits or self._digits()}Dg")

    def hi_str(self, digits: int | None = None) -> str:
        return format(self.hi, f".{digits or self._digits()}Ug")

    def mid_str(self, digits: int = 30) -> str:
        return format(self.mid, f".{digits}g")

    def __float__(self) -> float:
        return float(self.mid)

    def __repr__(self) -> str:
        return f"CertReal({self.mid_str(20)} +/- {float(self.rad):.3e}, prec={self.prec})"


Num = Union[CertReal, int, Fraction]


def as_cert(x: Num, prec: int = DEFAULT_PREC) -> CertReal:
    return x if isinstance(x, CertReal) else CertReal.exact(x, prec)


def cr_from_decimal(text: str, prec: int = DEFAULT_PREC) -> CertReal:
    """Certified enclosure of a decimal or ``p/q`` string."""
    if prec < MIN_PREC:
        raise CertRealError(f"precision must be at least {MIN_PREC} bits")
    return CertReal.exact(parse_rational(text), prec)


def _monotone(x: CertReal, fn: str, increasing: bool = True) -> CertReal:
    p = x.prec
    lo_arg, hi_arg = (x.lo, x.hi) if increasing else (x.hi, x.lo)
    lo = getattr(down(p), fn)(lo_arg)
    hi = getattr(up(p), fn)(hi_arg)
    return CertReal.from_bounds(lo, hi, p)


def _need_positive(x: CertReal, what: str) -> None:
    if not x.lo > 0:
        raise NotPositiveError(f"{what} needs a certified positive argument, got {x!r}")


def cr_root(x: Num, d: int) -> CertReal:
    """Enclosure of the real ``d``-th root of a certified positive ``x``."""
    x = as_cert(x)
    if d < 1:
        raise CertRealError("root index must be a positive integer")
    _need_positive(x, "cr_root")
    if d == 1:
        return x
    p = x.prec
    return CertReal.from_bounds(down(p).rootn(x.lo, d), up(p).rootn(x.hi, d), p)


def cr_sqrt(x: Num) -> CertReal:
    return cr_root(x, 2)


def cr_log(x: Num) -> CertReal:
    x = as_cert(x)
    _need_positive(x, "cr_log")
    return _monotone(x, "log")


def cr_log2(x: Num) -> CertReal:
    x = as_cert(x)
    _need_positive(x, "cr_log2")
    return _monotone(x, "log2")


def cr_exp(x: Num) -> CertReal:
    return _monotone(as_cert(x), "exp")


def cr_exp2(x: Num) -> CertReal:
    """Enclosure of ``2**x``; raises CertRealOverflow beyond the exponent range."""
    return _monotone(as_cert(x), "exp2")


def cr_expm1(x: Num) -> CertReal:
    return _monotone(as_cert(x), "expm1")


def cr_log1p(x: Num) -> CertReal:
    x = as_cert(x)
    if not x.lo > -1:
        raise NotPositiveError("cr_log1p needs x > -1")
    return _monotone(x, "log1p")


def cr_const_log2(prec: int) -> CertReal:
    return CertReal.from_bounds(down(prec).const_log2(), up(prec).const_log2(), prec)


def cr_exp2m1(x: Num) -> CertReal:
    """``2**x - 1`` without cancellation near zero."""
    x = as_cert(x)
    if x.is_exact and x.mid == 0:
        return CertReal.exact(0, x.prec)
    return cr_expm1((x * cr_const_log2(x.prec + 8)).with_prec(x.prec))


def cr_pow(x: Num, theta: Num) -> CertReal:
    """Enclosure of ``x**theta`` for certified positive ``x``.

    ``x**theta`` is monotone in each argument separately, so the extremes over
    the box sit at its corners; each corner is a correctly rounded MPFR power.
    """
    x = as_cert(x)
    theta = as_cert(theta, x.prec)
    _need_positive(x, "cr_pow")
    p = max(x.prec, theta.prec)
    if theta.is_exact and theta.mid == 0:
        return CertReal.exact(1, p)
    xs = (x.lo, x.hi) if x.rad else (x.mid,)
    ts = (theta.lo, theta.hi) if theta.rad else (theta.mid,)
    d, u = down(p), up(p)
    lo = min(d.pow(a, t) for a in xs for t in ts)
    hi = max(u.pow(a, t) for a in xs for t in ts)
    return CertReal.from_bounds(lo, hi, p)


def compare(x: CertReal, bound: Num) -> BoundVerdict:
    """LE when the whole interval is at most ``bound``, GT when it is strictly above."""
    if isinstance(bound, CertReal):
        b_lo, b_hi = bound.lo, bound.hi
    else:
        b = bound if not isinstance(bound, Fraction) else mpq(bound.numerator, bound.denominator)
        b_lo = b_hi = b
    if x.hi <= b_lo:
        return BoundVerdict.LE
    if x.lo > b_hi:
        return BoundVerdict.GT
    return BoundVerdict.UNDECIDED


@dataclass(frozen=True, slots=True)
class NearestInt:
    distance: CertReal
    verdict: BoundVerdict
    positive: bool
    nearest: int | None


_HALF = mpfr("0.5")


def _dist_to_int_bounds(t_lo: mpfr, t_hi: mpfr, p: int) -> tuple[mpfr, mpfr]:
    """Range of min(|t|, 1-|t|) over [t_lo, t_hi] inside (-3/4, 3/4)."""
    d, u = down(p), up(p)

    def g_down(t):
        a = fabs(t)
        return min(a, d.sub(1, a))

    def g_up(t):
        a = fabs(t)
        return min(a, u.sub(1, a))

    glo = mpfr(0) if t_lo <= 0 <= t_hi else min(g_down(t_lo), g_down(t_hi))
    if t_lo <= mpq(-1, 2) <= t_hi or t_lo <= _HALF <= t_hi:
        ghi = _HALF
    else:
        ghi = max(g_up(t_lo), g_up(t_hi))
    return glo, ghi


def dist_nearest_int(x: CertReal, bound: Num | None = None) -> NearestInt:
    """Certified ``||x||`` together with its verdict against ``bound``."""
    p = x.prec
    if x.rad >= mpfr("0.25"):
        half = CertReal.from_bounds(mpfr(0), _HALF, p)
        return NearestInt(half, BoundVerdict.UNDECIDED, False, None)
    m = round_int(x.mid)
    t_lo = down(p).sub(x.lo, m)
    t_hi = up(p).sub(x.hi, m)
    glo, ghi = _dist_to_int_bounds(t_lo, t_hi, p)
    dist = CertReal.from_bounds(glo, ghi, p)
    verdict = BoundVerdict.UNDECIDED if bound is None else compare(dist, bound)
    nearest = m if (t_lo > -_HALF and t_hi < _HALF) else None
    return NearestInt(dist, verdict, bool(glo > 0), nearest)


def cr_floor(x: CertReal) -> int:
    """Certified floor; raises Undecided when the interval straddles an integer."""
    if x.is_exact:
        return floor_int(x.mid)
    a, b = floor_int(x.lo), floor_int(x.hi)
    if a != b:
        raise Undecided("floor straddles an integer", x.prec)
    return int(a)


def cr_ceil(x: CertReal) -> int:
    if x.is_exact:
        return ceil_int(x.mid)
    a, b = ceil_int(x.lo), ceil_int(x.hi)
    if a != b:
        raise Undecided("ceiling straddles an integer", x.prec)
    return int(a)


def refine(fn: Callable[[int], T], start: int = DEFAULT_PREC, cap: int = PREC_CAP) -> T:
    """Call ``fn(prec)`` with doubling precision until it stops raising Undecided."""
    if start > cap:
        raise CertRealError("starting precision exceeds the cap")
    prec = max(start, MIN_PREC)
    while True:
        try:
            return fn(prec)
        except Undecided:
            if prec >= cap:
                raise
            prec = min(2 * prec, cap)
