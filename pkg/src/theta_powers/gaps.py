"""Elements of ``{u**theta + v**theta}`` just above a given x.

For theta in (0, 1) or (1, 2) the pair is ``(s + l, s - l)`` around
``s ~ (x/2)**(1/theta)``, where ``t -> (s+t)**theta + (s-t)**theta`` is
monotone and l is the integer on the safe side of its crossing with x.
For theta >= 2 the pair is ``(ceil((x - v**theta)**(1/theta)), v)`` with
``v = floor(x**(1/theta))``.  Every comparison with x is certified; exact
ties are detected through canonical radical forms.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Sequence

import gmpy2
import numpy as np

from .certreal import (
    DEFAULT_PREC,
    PREC_CAP,
    BoundVerdict,
    CertReal,
    Undecided,
    compare,
    cr_ceil,
    cr_pow,
    dist_nearest_int,
    parse_rational,
    refine,
    to_fraction,
)
from .caps import ENUM_CAP, CapExceeded
from .calibration import ALPHAS as CAL_ALPHAS
from .calibration import N as CAL_N
from .calibration import gap_xs, round_up_sig
from .exact import (
    TooLarge,
    certified_argmin,
    floor_rpow,
    frac_part,
    rpow,
    rpow_rational,
    same_distance,
    sum_form,
)

SIGN_CAP = 4096
REL_TOL = 1e-9


class Regime(enum.Enum):
    SUB1 = "SUB1"
    ONE = "ONE"
    SUPER1 = "SUPER1"
    GE2 = "GE2"


class NoBracket(ArithmeticError):
    """The monotone construction does not apply at this x."""


def as_fraction(v: str | int | Fraction) -> Fraction:
    return parse_rational(v) if isinstance(v, str) else Fraction(v)


def regime(theta: Fraction) -> Regime:
    if theta <= 0:
        raise ValueError("theta must be positive")
    if theta < 1:
        return Regime.SUB1
    if theta == 1:
        return Regime.ONE
    return Regime.SUPER1 if theta < 2 else Regime.GE2


def psi(theta: str | Fraction) -> Fraction:
    th = as_fraction(theta)
    r = regime(th)
    if r is Regime.ONE:
        return Fraction(0)
    if r is Regime.GE2:
        return 1 - 2 / th + 1 / (th * th)
    return 1 - Fraction(3, 2) / th


# exact-aware comparisons ----------------------------------------------------
def power_sum(terms: Sequence[int], theta: Fraction, prec: int) -> CertReal:
    acc = CertReal.exact(0, prec)
    for a in terms:
        if a:
            acc = acc + rpow(a, theta, prec)
    return acc


def _exact_power_sum(terms: Sequence[int], theta: Fraction) -> Fraction | None:
    """The sum when every term is rational, else None."""
    if theta.denominator == 1:
        return Fraction(sum(int(a) ** int(theta) for a in terms))
    total = Fraction(0)
    for a in terms:
        try:
            r = rpow_rational(a, theta)
        except TooLarge:
            return None
        if r is None:
            return None
        total += r
    return total


def sign_vs(terms: Sequence[int], theta: Fraction, x: Fraction, start: int = DEFAULT_PREC,
            cap: int = SIGN_CAP) -> int:
    """Certified sign of ``sum a**theta - x``."""
    exact = _exact_power_sum(terms, theta)
    if exact is not None:
        return (exact > x) - (exact < x)

    def attempt(p: int) -> int:
        s = (power_sum(terms, theta, p) - CertReal.exact(x, p)).sign()
        if s is None:
            raise Undecided("sign of power sum undecided", p)
        return s

    try:
        return refine(attempt, start, cap)
    except Undecided:
        f = sum_form(terms, theta)
        if f.is_rational and f.rational == x:
            return 0
        raise


# internals for theta in (0,1) and (1,2) ----------------------------------------
@dataclass(frozen=True)
class GapInternals:
    s: int
    E: CertReal
    k: CertReal
    l: int


def s_theta(theta: Fraction, x: Fraction) -> int:
    """``ceil((x/2)**(1/theta))`` below 1, ``floor`` of the same between 1 and 2."""
    r = regime(theta)
    if r is Regime.SUB1:
        return _ceil_root(x / 2, theta)
    if r is Regime.SUPER1:
        return floor_rpow(x / 2, 1 / theta)
    raise ValueError("s_theta is defined for theta in (0,1) or (1,2)")


def _ceil_root(y: Fraction, theta: Fraction) -> int:
    """Least integer s with s**theta >= y (y >= 0)."""
    if y <= 0:
        return 0
    s = floor_rpow(y, 1 / theta)
    return s if sign_vs([s], theta, y) >= 0 else s + 1


def _pair_sign(s: int, t: Fraction, theta: Fraction, x: Fraction, prec: int, cap: int) -> int:
    """Sign of (s+t)**theta + (s-t)**theta - x at a rational t in [0, s]."""
    if t.denominator == 1:
        return sign_vs([s + int(t), s - int(t)], theta, x, prec, cap)

    def attempt(p: int) -> int:
        a = CertReal.exact(s + t, p)
        b = CertReal.exact(s - t, p)
        val = cr_pow(a, CertReal.exact(theta, p))
        if b.sign() != 0:
            val = val + cr_pow(b, CertReal.exact(theta, p))
        v = (val - CertReal.exact(x, p)).sign()
        if v is None:
            raise Undecided("bisection sign undecided", p)
        return v

    return refine(attempt, prec, cap)


def solve_k_theta(theta: str | Fraction, x: str | Fraction, prec: int = DEFAULT_PREC) -> GapInternals:
    """s, E, an enclosure of width below 1/4 of the crossing k, and the safe-side integer l."""
    th, xx = as_fraction(theta), as_fraction(x)
    r = regime(th)
    if r not in (Regime.SUB1, Regime.SUPER1):
        raise ValueError("solve_k_theta needs theta in (0,1) or (1,2)")
    s = s_theta(th, xx)
    if s < 1:
        raise NoBracket("s is zero")
    E = CertReal.exact(xx, prec) - rpow(s, th, prec) * 2
    increasing = r is Regime.SUPER1

    def ge(l: int) -> bool:
        return _pair_sign(s, Fraction(l), th, xx, prec, SIGN_CAP) >= 0

    if increasing:
        if not ge(s):
            raise NoBracket("(2s)**theta < x")
        lo, hi = 0, s  # least l with ge(l)
        if ge(0):
            hi = 0
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if ge(mid):
                hi = mid
            else:
                lo = mid
        l = hi
        a, b = (Fraction(l - 1), Fraction(l)) if l > 0 else (Fraction(0), Fraction(0))
    else:
        if not ge(0):
            raise NoBracket("2 s**theta < x")
        if ge(s):
            l = s
        else:
            lo, hi = 0, s  # greatest l with ge(l)
            while hi - lo > 1:
                mid = (lo + hi) // 2
                if ge(mid):
                    lo = mid
                else:
                    hi = mid
            l = lo
        a, b = (Fraction(l), Fraction(min(l + 1, s)))
    if _pair_sign(s, Fraction(l), th, xx, prec, SIGN_CAP) == 0:
        a = b = Fraction(l)
    # shrink [a, b] around the crossing
    while b - a >= Fraction(1, 4):
        w = b - a
        for m in (a + w / 2, a + 3 * w / 8, a + 5 * w / 8):
            try:
                sg = _pair_sign(s, m, th, xx, prec, 1024)
            except Undecided:
                continue
            below = sg < 0 if increasing else sg > 0
            if sg == 0:
                a = b = m
            elif below:
                a = m
            else:
                b = m
            break
        else:
            break
    k = CertReal.from_bounds(_q2f(a, prec, False), _q2f(b, prec, True), prec)
    return GapInternals(s, E, k, l)


def _q2f(q: Fraction, prec: int, up: bool):
    c = CertReal.exact(q, prec)
    return c.hi if up else c.lo


# witnesses -------------------------------------------------------------------------
@dataclass(frozen=True)
class GapWitness:
    theta: str
    x: CertReal
    u: int
    v: int
    value: CertReal
    psi: Fraction
    slack: CertReal
    regime: Regime
    path: str
    internals: GapInternals | None = None


def _least_u(v: int, theta: Fraction, x: Fraction) -> int:
    """Least u >= 0 with u**theta + v**theta >= x."""
    if sign_vs([v], theta, x) >= 0:
        return 0
    est = max(0.0, float(x) - float(v) ** float(theta)) ** (1.0 / float(theta))
    u = max(0, math.ceil(est))
    while u > 0 and sign_vs([u - 1, v], theta, x) >= 0:
        u -= 1
    while sign_vs([u, v], theta, x) < 0:
        u += 1
    return u


def _witness(th: Fraction, xx: Fraction, theta_text: str, u: int, v: int, r: Regime, path: str,
             internals: GapInternals | None, prec: int) -> GapWitness:
    exact = _exact_power_sum([u, v], th)
    value = CertReal.exact(exact, prec) if exact is not None else power_sum([u, v], th, prec)
    xc = CertReal.exact(xx, prec)
    slack = CertReal.exact(exact - xx, prec) if exact is not None else value - xc
    return GapWitness(theta_text, xc, u, v, value, psi(th), slack, r, path, internals)


def gap_element(theta: str | Fraction, x: str | Fraction, prec: int = DEFAULT_PREC) -> GapWitness:
    """A pair (u, v) with ``u**theta + v**theta >= x`` from the regime's construction."""
    th, xx = as_fraction(theta), as_fraction(x)
    text = theta if isinstance(theta, str) else str(theta)
    if xx < 1:
        raise ValueError("x must be at least 1")
    r = regime(th)
    if r is Regime.ONE:
        u = math.ceil(xx)
        return _witness(th, xx, text, u, 0, r, "construction", None, prec)
    if r is Regime.GE2:
        v = floor_rpow(xx, 1 / th)
        u = _least_u(v, th, xx)
        return _witness(th, xx, text, u, v, r, "construction", None, prec)
    try:
        gi = solve_k_theta(th, xx, prec)
        u, v = gi.s + gi.l, gi.s - gi.l
        if sign_vs([u, v], th, xx) < 0:
            raise NoBracket("construction fell short of x")
        return _witness(th, xx, text, u, v, r, "construction", gi, prec)
    except (NoBracket, Undecided):
        u, v, _ = oracle_next_element(th, xx)
        return _witness(th, xx, text, u, v, r, "oracle", None, prec)


def ge2_bound(theta: Fraction, x: Fraction, prec: int = DEFAULT_PREC) -> CertReal:
    """``theta**(2 - 1/theta) * x**(1 - 2/theta + 1/theta**2)``."""
    th = CertReal.exact(theta, prec)
    return cr_pow(th, CertReal.exact(2 - 1 / theta, prec)) * cr_pow(CertReal.exact(x, prec), CertReal.exact(psi(theta), prec))


def ge2_bound_corrected(theta: Fraction, x: Fraction, prec: int = DEFAULT_PREC) -> CertReal:
    """``theta * ((theta * x**(1 - 1/theta))**(1/theta) + 1)**(theta - 1)``.

    Both mean value steps evaluate the derivative at the upper end of the
    interval, which is what makes this a valid bound for every x >= 1.
    """
    t = CertReal.exact(theta, prec)
    y = t * cr_pow(CertReal.exact(x, prec), CertReal.exact(1 - 1 / theta, prec))
    inner = cr_pow(y, CertReal.exact(1 / theta, prec)) + 1
    return t * cr_pow(inner, CertReal.exact(theta - 1, prec))


# oracle ----------------------------------------------------------------------------
def _window(vals: np.ndarray, xf: float) -> tuple[int, int]:
    """Index range of screened values that may hold the least element >= x."""
    tol = REL_TOL * max(1.0, abs(xf))
    i = int(np.searchsorted(vals, xf - tol, side="left"))
    j = int(np.searchsorted(vals, xf + tol, side="left"))
    if j >= len(vals):
        raise ValueError("no screened element above x")
    return i, int(np.searchsorted(vals, vals[j] + tol, side="right"))


def _certify_next(pairs: Iterable[tuple[int, int]], th: Fraction, xx: Fraction,
                  prec: int) -> tuple[int, int, CertReal]:
    cands = sorted({p for p in pairs if sign_vs(p, th, xx) >= 0})
    if not cands:
        raise Undecided("no screened element certified above x")
    forms = {c: sum_form(c, th) for c in cands} if th.denominator > 1 else None

    def same(a, b):
        if forms is None:
            return _exact_power_sum(a, th) == _exact_power_sum(b, th)
        return not (forms[a] - forms[b]).radicals and forms[a].rational == forms[b].rational

    winners, _ = certified_argmin(cands, lambda c, p: power_sum(c, th, p), same, prec, PREC_CAP)
    u, v = max(winners)
    exact = _exact_power_sum([u, v], th)
    value = CertReal.exact(exact, prec) if exact is not None else power_sum([u, v], th, prec)
    return u, v, value


def _check_cap(th: Fraction, xx: Fraction, cap: int) -> None:
    if Fraction(_ceil_root(xx, th)) > cap:
        raise ValueError(f"cap {cap} too small for x = {xx}: need cap**theta >= x")


class NextElementTable:
    """All ``u**theta + v**theta`` with 0 <= u <= v <= cap, sorted in float64 for screening."""

    def __init__(self, theta: str | Fraction, cap: int, enum_cap: int = ENUM_CAP):
        self.theta = as_fraction(theta)
        self.cap = int(cap)
        size = (self.cap + 1) * (self.cap + 2) // 2
        if size > enum_cap:
            raise CapExceeded(f"{size} pairs exceed the enumeration cap {enum_cap}")
        pw = np.arange(self.cap + 1, dtype=np.float64) ** float(self.theta)
        iu, iv = np.triu_indices(self.cap + 1)
        vals = pw[iu] + pw[iv]
        order = np.argsort(vals, kind="stable")
        self.vals = vals[order]
        self.u = iu[order].astype(np.int64)
        self.v = iv[order].astype(np.int64)

    def next(self, x: str | Fraction, prec: int = DEFAULT_PREC) -> tuple[int, int, CertReal]:
        xx = as_fraction(x)
        _check_cap(self.theta, xx, self.cap)
        i, end = _window(self.vals, float(xx))
        pairs = ((int(self.u[k]), int(self.v[k])) for k in range(i, end))
        return _certify_next(pairs, self.theta, xx, prec)


def _scan_next(th: Fraction, xx: Fraction, cap: int, prec: int,
               enum_cap: int = ENUM_CAP) -> tuple[int, int, CertReal]:
    """Linear-memory search: for each v the least u with u**theta >= x - v**theta, give or take one."""
    _check_cap(th, xx, cap)
    if 3 * (cap + 1) > enum_cap:
        raise CapExceeded(f"{3 * (cap + 1)} screened pairs exceed the enumeration cap {enum_cap}")
    xf, t = float(xx), float(th)
    pw = np.arange(cap + 1, dtype=np.float64) ** t
    rest = np.maximum(xf - pw, 0.0)
    u0 = np.ceil(rest ** (1.0 / t)).astype(np.int64)
    v = np.arange(cap + 1, dtype=np.int64)
    us = np.concatenate([u0 - 1, u0, u0 + 1])
    vs = np.concatenate([v, v, v])
    keep = (us >= 0) & (us <= cap)
    us, vs = us[keep], vs[keep]
    vals = pw[us] + pw[vs]
    order = np.argsort(vals, kind="stable")
    vals, us, vs = vals[order], us[order], vs[order]
    i, end = _window(vals, xf)
    pairs = (tuple(sorted((int(us[k]), int(vs[k])))) for k in range(i, end))
    return _certify_next(pairs, th, xx, prec)


def default_cap(theta: Fraction, x: Fraction) -> int:
    return max(1, _ceil_root(x, theta))


def oracle_next_element(theta: str | Fraction, x: str | Fraction, cap: int | None = None,
                        prec: int = DEFAULT_PREC, enum_cap: int = ENUM_CAP) -> tuple[int, int, CertReal]:
    """The least element of ``{u**theta + v**theta}`` that is at least x, with u <= v.

    Ties between representations go to the pair with the largest u.
    """
    th, xx = as_fraction(theta), as_fraction(x)
    if th.denominator == 1 and xx.denominator == 1 and th >= 1:
        return _integer_next(int(th), int(xx), cap)
    cap = default_cap(th, xx) if cap is None else cap
    return _scan_next(th, xx, cap, prec, enum_cap)


@lru_cache(maxsize=8)
def _table(theta: Fraction, cap: int) -> NextElementTable:
    return NextElementTable(theta, cap)


def _integer_next(e: int, x: int, cap: int | None) -> tuple[int, int, CertReal]:
    """Exact integer search for an integer exponent."""
    r, exact = gmpy2.iroot(gmpy2.mpz(max(x, 0)), e)
    need = int(r) + (0 if exact else 1)
    if cap is None:
        cap = need
    if cap < need:
        raise ValueError(f"cap {cap} too small for x = {x}: need cap**theta >= x")
    best, pair = None, None
    for v in range(cap, -1, -1):
        y = x - v**e
        if y <= 0:
            u = 0
        else:
            r, ex = gmpy2.iroot(gmpy2.mpz(y), e)
            u = int(r) + (0 if ex else 1)
        if u > v:
            break
        val = u**e + v**e
        if best is None or val < best or (val == best and u > pair[0]):
            best, pair = val, (u, v)
    return pair[0], pair[1], CertReal.exact(best)


def next_gaps(theta: str | Fraction, xs: Iterable[str | Fraction | int]) -> list[Fraction | CertReal]:
    """Oracle gap (least element minus x) for many x, sharing one table."""
    th = as_fraction(theta)
    xs = [as_fraction(x) for x in xs]
    if th.denominator == 1 and th >= 1 and all(x.denominator == 1 for x in xs):
        return [Fraction(int(to_fraction(_integer_next(int(th), int(x), None)[2].mid))) - x for x in xs]
    cap = default_cap(th, max(xs)) + 1
    table = _table(th, cap)
    out = []
    for x in xs:
        _, _, val = table.next(x)
        out.append(val - CertReal.exact(x, val.prec))
    return out


# two powers near alpha modulo one ------------------------------------------------------
@dataclass(frozen=True)
class TwoPowersResult:
    theta: Fraction
    alpha: str
    n: int
    u: int
    v: int
    dist: CertReal
    path: str
    lifted: Fraction | None
    constant: Fraction
    bound: CertReal
    verdict: BoundVerdict


def _two_powers_oracle(th: Fraction, q: Fraction, n: int, prec: int) -> tuple[int, int, CertReal]:
    pw = np.arange(n + 1, dtype=np.float64) ** float(th)
    iu, iv = np.triu_indices(n + 1)
    keep = (iu >= 1)
    iu, iv = iu[keep], iv[keep]
    s = pw[iu] + pw[iv] - float(q)
    d = np.abs(s - np.rint(s))
    best = d.min()
    idx = np.nonzero(d <= best + 1e-9)[0]
    cands = sorted({(int(iu[i]), int(iv[i])) for i in idx})
    forms = {c: sum_form(c, th) for c in cands}

    def ev(c, p):
        return dist_nearest_int(power_sum(c, th, p) - CertReal.exact(q, p)).distance

    winners, _ = certified_argmin(cands, ev, lambda a, b: same_distance(forms[a], forms[b], q), prec, PREC_CAP)
    u, v = max(winners)
    return u, v, ev((u, v), prec)


def _two_powers(th: Fraction, q: Fraction, n: int, prec: int) -> tuple[int, int, CertReal, str, Fraction | None]:
    if sign_vs([n], th, Fraction(5)) < 0:
        return (*_two_powers_oracle(th, q, n, prec), "oracle", None)
    fa = frac_part(q)
    nt = rpow_rational(n, th)
    if nt is not None:
        m = math.ceil(nt / 5 - fa)
    else:
        m = refine(lambda p: cr_ceil(rpow(n, th, p) / 5 - CertReal.exact(fa, p)), prec, PREC_CAP)
    lifted = m + fa
    w = gap_element(th, lifted, prec)
    u, v = w.u, w.v
    if u == 0:
        u, v = v, 1
    elif v == 0:
        v = 1
    if not (1 <= u <= n and 1 <= v <= n):
        return (*_two_powers_oracle(th, q, n, prec), "oracle", lifted)
    dist = dist_nearest_int(power_sum([u, v], th, prec) - CertReal.exact(q, prec)).distance
    return u, v, dist, "construction", lifted


def _check_two_theta(th: Fraction) -> None:
    if not (0 < th < 1 or 1 < th < Fraction(3, 2)):
        raise ValueError("theta must lie in (0,1) or (1,3/2)")


@lru_cache(maxsize=None)
def calibrated_two_powers_constant(theta: Fraction) -> Fraction:
    """max over the alpha grid of ``dist * n**(3/2 - theta)`` at n = 2**8."""
    _check_two_theta(theta)
    scale = cr_pow(CertReal.exact(CAL_N), CertReal.exact(Fraction(3, 2) - theta))
    best = Fraction(0)
    for a in CAL_ALPHAS:
        dist = _two_powers(theta, parse_rational(a), CAL_N, DEFAULT_PREC)[2]
        best = max(best, round_up_sig(dist * scale))
    return best


def approx_two_powers(theta: str | Fraction, alpha: str | Fraction, n: int, prec: int = DEFAULT_PREC,
                      constant: Fraction | None = None) -> TwoPowersResult:
    """1 <= u, v <= n with ``u**theta + v**theta`` close to alpha modulo one.

    Alpha is lifted to ``m + frac(alpha)`` in ``[n**theta/5, 2 n**theta/5]`` and
    the next element above the lift is taken; a pair with a zero entry gets
    that entry replaced by 1, which shifts the sum by exactly 1.
    """
    th = as_fraction(theta)
    _check_two_theta(th)
    q = as_fraction(alpha)
    text = alpha if isinstance(alpha, str) else str(alpha)
    u, v, dist, path, lifted = _two_powers(th, q, n, prec)
    C = calibrated_two_powers_constant(th) if constant is None else constant
    bound = CertReal.exact(C, prec) * cr_pow(CertReal.exact(n, prec), CertReal.exact(th - Fraction(3, 2), prec))
    return TwoPowersResult(th, text, n, u, v, dist, path, lifted, C, bound, compare(dist, bound))


# gap constants -------------------------------------------------------------------------
@lru_cache(maxsize=None)
def calibrated_gap_constant(theta: Fraction) -> Fraction:
    """max of ``slack * x**-psi`` over the log-spaced grid in [1e2, 1e4], rounded up.

    Exponents of at least 2 use the explicit bound instead; theta = 1 has slack below 1.
    """
    r = regime(theta)
    if r is Regime.GE2:
        raise ValueError("theta >= 2 uses the explicit constant")
    if r is Regime.ONE:
        return Fraction(1)
    p = psi(theta)
    best = Fraction(0)
    for x in gap_xs():
        w = gap_element(theta, x)
        scaled = w.slack * cr_pow(w.x, CertReal.exact(-p))
        best = max(best, round_up_sig(scaled))
    return best


def gap_bound(theta: str | Fraction, x: str | Fraction, prec: int = DEFAULT_PREC) -> CertReal:
    """The containment bound ``D * x**psi`` (explicit for theta >= 2, calibrated otherwise)."""
    th, xx = as_fraction(theta), as_fraction(x)
    if regime(th) is Regime.GE2:
        return ge2_bound(th, xx, prec)
    D = calibrated_gap_constant(th)
    return CertReal.exact(D, prec) * cr_pow(CertReal.exact(xx, prec), CertReal.exact(psi(th), prec))
