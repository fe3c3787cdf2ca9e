"""Approximating a real modulo one by sums of k d-th roots of integers up to n.

The constructive route: a greedy chain of ever smaller fractional parts
(each found by pigeonhole) drives a residual towards zero, a shift by
``floor(n/2)`` on every coefficient keeps all coefficients positive, and
each term ``c * f**(1/d)`` is folded into the single root ``(c**d * f)**(1/d)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable, Sequence, Union

import gmpy2
import numpy as np

from . import kernels
from .calibration import ALPHAS, N, round_up_sig
from .caps import ENUM_CAP, CapExceeded
from .certreal import (
    DEFAULT_PREC,
    PREC_CAP,
    BoundVerdict,
    CertReal,
    Undecided,
    compare,
    cr_floor,
    cr_pow,
    dist_nearest_int,
    floor_int,
    parse_rational,
    refine,
    shift,
)
from .exact import (
    ceil_rpow,
    certified_argmin,
    floor_rpow,
    frac_part,
    rpow,
    rpow_rational,
    same_distance,
    sum_form,
)
from .radical import (
    RadicalBasis,
    RadicalSum,
    _basis_fracs,
    build_basis,
    eval_radical_sum,
    find_small_fracpart,
    frac64,
    root_cr,
)

LazyReal = Callable[[int], CertReal]
AlphaLike = Union[str, Fraction, int, CertReal, LazyReal]

CALIBRATION_ALPHAS = ALPHAS
CALIBRATION_N = N


# exponents -----------------------------------------------------------------
def xi_for(k: int, d: int) -> int:
    """Largest xi with d**xi <= k + 1."""
    if k < 1 or d < 2:
        raise ValueError("need k >= 1 and d >= 2")
    xi = 0
    while d ** (xi + 1) <= k + 1:
        xi += 1
    return xi


def gamma(k: int, d: int) -> Fraction:
    return Fraction(d ** xi_for(k, d) - 1, d)


def gamma_lower(k: int, d: int) -> Fraction:
    """The elementary lower bound (k - d + 1)/d**2."""
    return Fraction(k - d + 1, d * d)


def gamma_star(k: int, d: int) -> Fraction:
    if k == 1:
        return 1 - Fraction(1, d)
    two = Fraction(3, 2) - Fraction(1, d)
    return two if k == 2 else max(two, gamma(k, d))


# alpha handling ------------------------------------------------------------
def as_lazy(alpha: AlphaLike) -> LazyReal:
    if callable(alpha) and not isinstance(alpha, CertReal):
        return alpha
    if isinstance(alpha, CertReal):
        return lambda p: alpha
    q = parse_rational(alpha) if isinstance(alpha, str) else Fraction(alpha)
    return lambda p: CertReal.exact(q, p)


def exact_alpha(alpha: AlphaLike) -> Fraction | None:
    if isinstance(alpha, str):
        return parse_rational(alpha)
    if isinstance(alpha, (int, Fraction)):
        return Fraction(alpha)
    return None


def alpha_text(alpha: AlphaLike) -> str:
    if isinstance(alpha, str):
        return alpha
    if isinstance(alpha, (int, Fraction)):
        return str(alpha)
    return repr(alpha)


# single power --------------------------------------------------------------
@dataclass(frozen=True)
class SingleResult:
    theta: Fraction
    alpha: str
    n: int
    a: int
    dist: CertReal
    bound: CertReal
    verdict: BoundVerdict


def _dist_mod1(value_at: LazyReal, alpha: LazyReal, prec: int) -> CertReal:
    return dist_nearest_int(value_at(prec) - alpha(prec)).distance


def approx_single(theta: str | Fraction, alpha: AlphaLike, n: int, prec: int = DEFAULT_PREC,
                  prec_cap: int = PREC_CAP) -> SingleResult:
    """``a <= n`` with ``a**theta`` close to alpha modulo one, for 0 < theta < 1.

    With ``N = floor(n**theta)`` the real ``r = (N - 1 + frac(alpha))**(1/theta)``
    has ``r**theta`` congruent to alpha and ``a = ceil(r)``.  The mean value
    theorem bounds the error by ``theta * (N - 1)**(1 - 1/theta)``.
    """
    th = parse_rational(theta) if isinstance(theta, str) else Fraction(theta)
    if not 0 < th < 1:
        raise ValueError("theta must lie strictly between 0 and 1")
    N = floor_rpow(n, th, prec, prec_cap)
    if N < 2:
        raise ValueError("need n**theta >= 2")
    q = exact_alpha(alpha)
    if q is None:
        raise TypeError("approx_single needs an exact rational alpha")
    y = N - 1 + frac_part(q)
    a = ceil_rpow(y, 1 / th, prec, prec_cap)
    exact = rpow_rational(a, th)
    if exact is not None:
        d = abs(frac_part(exact - q))
        dist = CertReal.exact(min(d, 1 - d), prec)
    else:
        dist = _dist_mod1(lambda p: rpow(a, th, p), as_lazy(q), prec)
    bound = th * rpow(N - 1, 1 - 1 / th, prec)
    return SingleResult(th, alpha_text(alpha), n, a, dist, bound, compare(dist, bound))


# greedy chain --------------------------------------------------------------
@dataclass(frozen=True)
class Level:
    j: int
    x: RadicalSum
    y: int


@dataclass(frozen=True)
class ChainResult:
    omega: RadicalSum
    levels: tuple[Level, ...]
    residual: CertReal
    level_bound: Fraction
    completed: bool = False


def _floor_ratio(num: LazyReal, den: LazyReal, start: int, cap: int) -> int:
    """Certified floor of num/den; past the cap, the safe lower floor."""
    try:
        return refine(lambda p: cr_floor(num(p) / den(p)), start, cap)
    except Undecided:
        return max(0, floor_int((num(cap) / den(cap)).lo))


def _complete(basis: RadicalBasis, omega: RadicalSum, residual: LazyReal, n: int, prec: int,
              prec_cap: int, enum_cap: int) -> RadicalSum | None:
    """Best extra step delta with ``0 <= residual - frac(delta)`` inside the remaining box."""
    lo = np.array([-n - c for c in omega.coeffs], dtype=np.int64)
    hi = np.array([n - c for c in omega.coeffs], dtype=np.int64)
    total = math.prod(int(h - l + 1) for l, h in zip(lo, hi))
    if total > enum_cap:
        return None
    vals = kernels.lattice_fracs(_basis_fracs(basis), lo, hi)
    r = residual(prec)
    target = max(0, floor_int(shift(r.lo, 64)))
    slack = 4 * basis.size * n + 8
    ok = np.nonzero(vals <= np.uint64(min(target + slack, (1 << 64) - 1)))[0]
    ok = ok[np.argsort(vals[ok], kind="stable")[::-1]][:256]
    widths = [int(h - l + 1) for l, h in zip(lo, hi)]
    for idx in ok:
        rest, delta = int(idx), [0] * basis.size
        for i in range(basis.size - 1, -1, -1):
            rest, rem = divmod(rest, widths[i])
            delta[i] = int(lo[i]) + rem
        if not any(delta):
            return None
        step = RadicalSum(basis, tuple(delta), 0)
        try:
            fl = refine(lambda p: cr_floor(eval_radical_sum(step, p)), prec, prec_cap)
            step = step.shift_offset(fl)
            sign = refine(lambda p: _sign_or_raise(residual(p) - eval_radical_sum(step, p)), prec, prec_cap)
        except Undecided:
            continue
        if sign >= 0:
            return step
    return None


def _sign_or_raise(x: CertReal) -> int:
    s = x.sign()
    if s is None:
        raise Undecided("sign undecided", x.prec)
    return s


def greedy_chain(basis: RadicalBasis, alpha0: AlphaLike, n: int, complete: bool = False,
                 prec: int | None = None, prec_cap: int = PREC_CAP, enum_cap: int = ENUM_CAP) -> ChainResult:
    """Greedy expansion of alpha0 in [0, 1) by small positive fractional parts.

    Level j uses the pigeonhole element at height 2**j and takes the largest
    multiple that keeps the residual nonnegative.  The chain stops at the first
    level that would push the height past n.  With ``complete=True`` one last
    exhaustive step over the unused height budget is taken.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    a0 = as_lazy(alpha0)
    q0 = exact_alpha(alpha0)
    prec = prec or max(DEFAULT_PREC, 64 + basis.d**basis.xi * max(1, n.bit_length()))
    zero = RadicalSum.zero(basis)
    if q0 is not None:
        if not 0 <= q0 < 1:
            raise ValueError("alpha0 must lie in [0, 1)")
        if q0 == 0:
            return ChainResult(zero, (), CertReal.exact(0, prec), Fraction(0))
    omega, levels, bound = zero, [], Fraction(1)

    def residual_of(w: RadicalSum) -> LazyReal:
        return lambda p: a0(p) - eval_radical_sum(w, p)

    j = 1
    while 2**j <= n:
        try:
            x = find_small_fracpart(basis, 2**j, enum_cap, prec_cap)
        except CapExceeded:
            break
        y = _floor_ratio(residual_of(omega), lambda p, x=x: eval_radical_sum(x, p), prec, prec_cap)
        cand = omega + x.scale(y)
        if cand.height > n:
            break
        omega = cand
        levels.append(Level(j, x, y))
        bound = Fraction(1, 2 ** (j * basis.size))
        j += 1
    completed = False
    if complete:
        step = _complete(basis, omega, residual_of(omega), n, prec, prec_cap, enum_cap)
        if step is not None:
            omega = omega + step
            completed = True
    return ChainResult(omega, tuple(levels), residual_of(omega)(prec), bound, completed)


# positive shift -------------------------------------------------------------
@dataclass(frozen=True)
class ShiftResult:
    coeffs: dict[int, int]
    dist: CertReal
    chain: ChainResult
    half: int
    budget: int


def positive_shift(basis: RadicalBasis, alpha: AlphaLike, n: int, complete: bool = True,
                   prec: int | None = None, prec_cap: int = PREC_CAP, enum_cap: int = ENUM_CAP) -> ShiftResult:
    """Coefficients ``c_f`` in ``[n//2 - n//3, n//2 + n//3]`` with ``sum c_f f**(1/d)`` near alpha mod 1."""
    if n < 6:
        raise ValueError("positive_shift needs n >= 6")
    h, budget = n // 2, n // 3
    prec = prec or max(DEFAULT_PREC, 64 + basis.d**basis.xi * max(1, n.bit_length()))
    alpha_at = as_lazy(alpha)
    rho = RadicalSum(basis, (h,) * basis.size, 0)
    try:
        base = refine(lambda p: cr_floor(alpha_at(p) - eval_radical_sum(rho, p)), prec, min(prec_cap, 8 * prec))
    except Undecided:
        # alpha - rho is numerically an integer: rho already hits alpha
        base = None
    if base is None:
        chain = ChainResult(RadicalSum.zero(basis), (), CertReal.exact(0, prec), Fraction(1), False)
    else:
        shifted = rho.shift_offset(-base)

        def alpha0(p: int) -> CertReal:
            return alpha_at(p) - eval_radical_sum(shifted, p)

        chain = greedy_chain(basis, alpha0, budget, complete, prec, prec_cap, enum_cap)
    total = rho + chain.omega
    coeffs = dict(zip(basis.elements, total.coeffs))
    dist = _dist_mod1(lambda p: eval_radical_sum(RadicalSum(basis, total.coeffs, 0), p), alpha_at, prec)
    return ShiftResult(coeffs, dist, chain, h, budget)


# oracle ----------------------------------------------------------------------
@dataclass(frozen=True)
class OracleResult:
    b: tuple[int, ...]
    dist: CertReal


def sum_roots(b: Sequence[int], d: int, prec: int) -> CertReal:
    acc = CertReal.exact(0, prec)
    for x in b:
        acc = acc + root_cr(int(x), d, prec)
    return acc


def _row_dists(F: np.ndarray, rows: np.ndarray, target: int) -> np.ndarray:
    with np.errstate(over="ignore"):
        s = F[rows].sum(axis=1, dtype=np.uint64) - np.uint64(target)
    return kernels.circ_dist(s)


def oracle_min_sum(k: int, d: int, alpha: str | Fraction, n: int, exclude_exact: bool = False,
                   enum_cap: int = ENUM_CAP, prec: int = DEFAULT_PREC, prec_cap: int = PREC_CAP) -> OracleResult:
    """Exhaustive minimiser of ``||sum b_j**(1/d) - alpha||`` over 1 <= b_1 <= ... <= b_k <= n.

    Ties are broken towards the lexicographically largest multiset.  With
    ``exclude_exact`` multisets whose sum differs from alpha by an integer are
    skipped.
    """
    if k < 1 or n < 1:
        raise ValueError("need k >= 1 and n >= 1")
    count = math.comb(n + k - 1, k)
    if count > enum_cap:
        raise CapExceeded(f"{count} multisets exceed the enumeration cap {enum_cap}")
    q = exact_alpha(alpha)
    if q is None:
        raise TypeError("oracle_min_sum needs an exact rational alpha")
    theta = Fraction(1, d)
    F = np.array([frac64(b, d) for b in range(1, n + 1)], dtype=np.uint64)
    fq = frac_part(q)
    target = (fq.numerator << 64) // fq.denominator
    slack = 2 * (k + 2)

    def is_exact(row) -> bool:
        return sum_form([int(x) + 1 for x in row], theta).near_integer_is_zero(q)

    limit = kernels.multiset_best(F, k, target) + slack
    while True:
        rows = kernels.multiset_collect(F, k, target, min(limit, 1 << 63))
        if exclude_exact:
            rows = rows[[not is_exact(r) for r in rows]] if len(rows) else rows
        if len(rows):
            need = int(_row_dists(F, rows, target).min()) + slack
            if need <= limit:
                break
            limit = need
            continue
        if limit >= 1 << 63:
            raise ValueError("no multiset away from alpha by a non-integer")
        limit = 2 * limit + (1 << 20)
    cands = sorted({tuple(int(x) + 1 for x in r) for r in rows})
    forms = {c: sum_form(c, theta) for c in cands}
    alpha_at = as_lazy(q)

    def evaluate(c, p):
        return dist_nearest_int(sum_roots(c, d, p) - alpha_at(p)).distance

    winners, dist = certified_argmin(cands, evaluate, lambda a, b: same_distance(forms[a], forms[b], q),
                                     prec, prec_cap)
    best = max(winners)
    return OracleResult(best, evaluate(best, dist.prec))


# assembly ------------------------------------------------------------------------
@dataclass(frozen=True)
class ApproxCertificate:
    k: int
    d: int
    n: int
    alpha: str
    b: tuple[int, ...]
    dist: CertReal
    exponent: Fraction
    constant: Fraction
    bound: CertReal
    verdict: BoundVerdict
    path: str
    notes: tuple[str, ...] = field(default_factory=tuple)


def _construct(k: int, d: int, alpha: AlphaLike, n: int, prec: int, prec_cap: int,
               enum_cap: int) -> tuple[tuple[int, ...], CertReal, str, tuple[str, ...]]:
    xi = xi_for(k, d)
    alpha_at = as_lazy(alpha)
    if xi == 0:
        b = (1,) * k
        return b, _dist_mod1(lambda p: CertReal.exact(k, p), alpha_at, prec), "trivial", ("k + 1 < d: every b is 1",)
    basis = build_basis(d, xi)
    budget = int(gmpy2.iroot(gmpy2.mpz(n // basis.modulus), d)[0])
    threshold = 2**d * basis.modulus
    if n < threshold or budget < 6:
        res = oracle_min_sum(k, d, alpha, n, enum_cap=enum_cap, prec=prec, prec_cap=prec_cap)
        why = f"n below construction threshold (n < {threshold} or budget {budget} < 6)"
        return res.b, res.dist, "oracle", (why,)
    shift = positive_shift(basis, alpha, budget, True, None, prec_cap, enum_cap)
    roots = sorted(c**d * f for f, c in shift.coeffs.items())
    b = tuple(sorted(roots + [1] * (k + 1 - d**xi)))
    assert all(1 <= x <= n for x in b)
    dist = _dist_mod1(lambda p: sum_roots(b, d, p), alpha_at, prec)
    return b, dist, "construction", ()


@lru_cache(maxsize=None)
def calibrated_constant(k: int, d: int) -> Fraction:
    """max over the calibration grid of ``dist * n**gamma`` at n = 2**8, rounded up."""
    g = gamma(k, d)
    best = Fraction(0)
    scale = cr_pow(CertReal.exact(CALIBRATION_N), CertReal.exact(g))
    for a in CALIBRATION_ALPHAS:
        _, dist, _, _ = _construct(k, d, a, CALIBRATION_N, DEFAULT_PREC, PREC_CAP, ENUM_CAP)
        best = max(best, round_up_sig(dist * scale))
    return best


def approx_sum_roots(k: int, d: int, alpha: AlphaLike, n: int, prec: int = DEFAULT_PREC,
                     prec_cap: int = PREC_CAP, enum_cap: int = ENUM_CAP,
                     constant: Fraction | None = None) -> ApproxCertificate:
    """Integers 1 <= b_j <= n with ``sum b_j**(1/d)`` close to alpha modulo one."""
    if n < 1:
        raise ValueError("n must be positive")
    b, dist, path, notes = _construct(k, d, alpha, n, prec, prec_cap, enum_cap)
    g = gamma(k, d)
    C = calibrated_constant(k, d) if constant is None else constant
    bound = CertReal.exact(C, prec) * cr_pow(CertReal.exact(n, prec), CertReal.exact(-g, prec))
    return ApproxCertificate(k, d, n, alpha_text(alpha), b, dist, g, C, bound, compare(dist, bound), path, notes)
