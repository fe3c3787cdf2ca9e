"""Solution counting, measure sampling, and exceptional exponents.

Counting looks for tuples ``a_1 <= ... <= a_k = m`` whose power sum is within
``rho(m) / m**k`` of an integer.  The exceptional-exponent construction builds
theta = r/s + sum_d 1/(s_0 ... s_d) so that ``(2**N_h)**theta`` sits just above
the integer ``2**U_h`` for every certified level h; all work on those numbers
is done through their base-2 logarithms.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations_with_replacement

import gmpy2
import numpy as np

from . import kernels
from .caps import ENUM_CAP, SEQ_CAP, CapExceeded, NotRepresentable
from .certreal import (
    DEFAULT_PREC,
    PREC_CAP,
    BoundVerdict,
    CertReal,
    Undecided,
    ceil_int,
    compare,
    cr_ceil,
    cr_const_log2,
    cr_exp2,
    cr_exp2m1,
    cr_floor,
    cr_log1p,
    cr_log2,
    dist_nearest_int,
    floor_int,
    parse_rational,
    refine,
)
from .exact import TooLarge, rpow, sum_form
from .schedules import Phi, Rho, parse_phi

# float screening slack, relative to the size of the sum
SCREEN_MARGIN = 1e-12
# exponents of 2 beyond this are replaced by this when only an upper bound is needed
_TINY_EXP = 1 << 20


def _theta(theta: str | Fraction) -> Fraction:
    th = parse_rational(theta) if isinstance(theta, str) else Fraction(theta)
    if th <= 0:
        raise ValueError("theta must be positive")
    return th


def _multisets(m: int, k: int) -> int:
    """Number of tuples a_1 <= ... <= a_k = m."""
    return math.comb(m + k - 2, k - 1)


# counting -------------------------------------------------------------------------------
@dataclass(frozen=True)
class SolutionRecord:
    omega: tuple[int, ...]
    b: int
    residual: CertReal
    m: int
    threshold: CertReal
    exact: bool


@dataclass(frozen=True)
class UndecidedRecord:
    omega: tuple[int, ...]
    m: int
    residual: CertReal
    threshold: CertReal


@dataclass
class CountResult:
    theta: Fraction
    k: int
    rho: Rho
    M: int
    records: list[SolutionRecord]
    undecided: list[UndecidedRecord]
    screened: int
    precision: int = DEFAULT_PREC

    @property
    def exact_count(self) -> int:
        return sum(1 for r in self.records if r.exact)


def threshold(rho: Rho, m: int, k: int, prec: int) -> tuple[CertReal, Fraction | None]:
    """``rho(m) / m**k`` as an enclosure, plus its exact value when rational."""
    ev = rho.exact_value(m)
    if ev is not None:
        q = ev / Fraction(m) ** k
        return CertReal.exact(q, prec), q
    return rho.value(m, prec) / CertReal.exact(m**k, prec), None


def certify_tuple(
    omega: tuple[int, ...], theta: Fraction, rho: Rho, prec: int = DEFAULT_PREC, prec_cap: int = PREC_CAP
) -> SolutionRecord | UndecidedRecord | None:
    """Decide ``||sum a_j**theta|| <= rho(m)/m**k``; None when it fails."""
    m, k = omega[-1], len(omega)
    try:
        form = sum_form(omega, theta)
    except TooLarge:
        form = None
    if form is not None and form.is_rational:
        v = form.rational
        b = math.floor(v + Fraction(1, 2))
        res = abs(v - b)
        thr, thr_q = threshold(rho, m, k, prec)
        if thr_q is not None:
            ok = res <= thr_q
        else:
            ok = refine(lambda p: _decide(CertReal.exact(res, p), threshold(rho, m, k, p)[0]), prec, prec_cap)
        if not ok:
            return None
        return SolutionRecord(omega, b, CertReal.exact(res, prec), m, thr, True)

    last: list = []

    def attempt(p: int) -> SolutionRecord | None:
        s = CertReal.exact(0, p)
        for a in omega:
            s = s + rpow(a, theta, p)
        near = dist_nearest_int(s)
        thr = threshold(rho, m, k, p)[0]
        last[:] = [near.distance, thr]
        if near.nearest is None:
            if compare(near.distance, thr) is BoundVerdict.GT:
                return None
            raise Undecided("nearest integer ambiguous", p)
        if not _decide(near.distance, thr):
            return None
        return SolutionRecord(omega, near.nearest, near.distance, m, thr, False)

    try:
        return refine(attempt, prec, prec_cap)
    except Undecided:
        return UndecidedRecord(omega, m, last[0], last[1])


def _decide(x: CertReal, bound: CertReal) -> bool:
    v = compare(x, bound)
    if v is BoundVerdict.UNDECIDED:
        raise Undecided("residual straddles the threshold", x.prec)
    return v is BoundVerdict.LE


def count_solutions(
    theta: str | Fraction,
    k: int,
    rho: Rho,
    M: int,
    prec: int = DEFAULT_PREC,
    prec_cap: int = PREC_CAP,
    enum_cap: int = ENUM_CAP,
    threads: int = 1,
) -> CountResult:
    """All tuples with m <= M meeting the threshold, screened in floats then certified."""
    th = _theta(theta)
    if k < 1 or M < 1:
        raise ValueError("need k >= 1 and M >= 1")
    total = math.comb(M + k - 1, k)
    if total > enum_cap:
        raise CapExceeded(f"{total} tuples exceed the enumeration cap {enum_cap}")
    pw = np.arange(M + 1, dtype=np.float64) ** float(th)
    thr = np.array([0.0] + [rho.value_float(m) / float(m) ** k for m in range(1, M + 1)]) * (1 + 1e-9)
    chunks = _split(M, max(1, threads))
    if len(chunks) == 1:
        parts = [kernels.power_sum_screen(pw, k, M, thr, SCREEN_MARGIN)]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(lambda c: kernels.power_sum_screen(pw, k, c[1], thr, SCREEN_MARGIN, c[0]), chunks))
    rows = np.concatenate(parts) if parts else np.zeros((0, k), dtype=np.int64)
    records, undecided = [], []
    for row in rows:
        r = certify_tuple(tuple(int(a) for a in row), th, rho, prec, prec_cap)
        if isinstance(r, SolutionRecord):
            records.append(r)
        elif isinstance(r, UndecidedRecord):
            undecided.append(r)
    return CountResult(th, k, rho, M, records, undecided, len(rows), prec)


def _split(M: int, parts: int) -> list[tuple[int, int]]:
    # later m carry more tuples, so the cut points follow the cumulative count
    if parts == 1 or M < 2 * parts:
        return [(1, M)]
    bounds = [1 + round(M * math.sqrt(i / parts)) for i in range(parts)] + [M + 1]
    return [(a, b - 1) for a, b in zip(bounds, bounds[1:]) if b > a]


def verify_record(rec: SolutionRecord, theta: str | Fraction, rho: Rho, prec: int) -> bool:
    """Re-run certification at ``prec`` and check the answer is unchanged."""
    again = certify_tuple(rec.omega, _theta(theta), rho, prec, max(prec, PREC_CAP))
    return isinstance(again, SolutionRecord) and again.b == rec.b and again.residual.intersects(rec.residual)


# measure sampling -----------------------------------------------------------------------
@dataclass(frozen=True)
class MeasureResult:
    k: int
    rho: Rho
    m: int
    lo: Fraction
    hi: Fraction
    grid: int
    hits: int
    measure: float
    threshold: float
    envelope: float  # m**-1 * rho(m), the shape the measure should follow

    @property
    def fraction(self) -> float:
        return self.hits / self.grid


def tuples_of_height(m: int, k: int) -> np.ndarray:
    """Rows a_1 <= ... <= a_k = m, lexicographic."""
    rows = [pre + (m,) for pre in combinations_with_replacement(range(1, m + 1), k - 1)]
    return np.array(rows, dtype=np.int64).reshape(-1, k)


def sample_Vm_measure(
    k: int,
    rho: Rho,
    m: int,
    lo: str | Fraction,
    hi: str | Fraction,
    grid: int,
    enum_cap: int = ENUM_CAP,
    threads: int = 1,
) -> MeasureResult:
    """Grid estimate of the measure of theta in [lo, hi] with some tuple of height m within threshold.

    Grid points are cell midpoints; the count is a float screen, not a certificate.
    """
    lo_q, hi_q = _theta(lo), _theta(hi)
    if not lo_q < hi_q:
        raise ValueError("need lo < hi")
    if grid < 1000:
        raise ValueError("grid must be at least 1000")
    if k < 1 or m < 1:
        raise ValueError("need k >= 1 and m >= 1")
    size = _multisets(m, k)
    if size > enum_cap:
        raise CapExceeded(f"{size} tuples exceed the enumeration cap {enum_cap}")
    omegas = tuples_of_height(m, k)
    thr = rho.value_float(m) / float(m) ** k
    a, b = float(lo_q), float(hi_q)
    bases = np.arange(m + 1, dtype=np.float64)
    block = max(1, (1 << 22) // max(1, m + 1, size))

    def run(g0: int) -> int:
        g = np.arange(g0, min(grid, g0 + block), dtype=np.float64)
        thetas = a + (g + 0.5) * ((b - a) / grid)
        table = bases[None, :] ** thetas[:, None]
        return int(kernels.vm_hits(table, omegas, thr).sum())

    starts = range(0, grid, block)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            hits = sum(pool.map(run, starts))
    else:
        hits = sum(run(g0) for g0 in starts)
    return MeasureResult(k, rho, m, lo_q, hi_q, grid, hits, hits / grid * (b - a), thr, rho.value_float(m) / m)


# exceptional exponents ------------------------------------------------------------------
@dataclass(frozen=True)
class ScaledInt:
    """The integer ``mantissa * 2**shift + addend``, for terms too large to expand."""

    mantissa: int
    shift: int
    addend: int

    def to_json(self) -> dict:
        return {"mantissa": str(self.mantissa), "shift": str(self.shift), "addend": str(self.addend)}

    def expand(self) -> int | None:
        """The plain integer, or None when the shift is too large to write out."""
        return (self.mantissa << self.shift) + self.addend if self.shift <= _EXPAND_SHIFT else None

    def __str__(self) -> str:
        return f"{self.mantissa}*2^{self.shift}+{self.addend}"


@dataclass(frozen=True)
class Step:
    """Choice of s_{h+1} from level h."""

    h: int
    U: int
    N: int  # n_h = 2**N
    log2_phi: CertReal
    chosen: int | ScaledInt
    minimal: bool  # s_{h+1} - 1 certified to fail, or s_{h+1} = s_h
    below: BoundVerdict | None  # verdict for s_{h+1} - 1; None when the floor s_h binds
    lower: int | ScaledInt  # certified lower bound on the minimal admissible s_{h+1}


@dataclass(frozen=True)
class ThetaSeq:
    r: int
    s: int
    phi: Phi
    seq: tuple  # s_0, ..., s_H; only the last entry may be a ScaledInt
    steps: tuple[Step, ...]
    theta: CertReal
    theta_bounds: tuple[Fraction, Fraction] | None  # exact rational enclosure when all terms are integers
    notes: tuple[str, ...] = field(default=())

    @property
    def depth(self) -> int:
        return len(self.seq) - 1

    def U(self, h: int) -> int:
        return self.steps[h].U

    def N(self, h: int) -> int:
        return self.steps[h].N


def U_values(r: int, seq: list[int]) -> list[int]:
    """U(s, h) for h = 0..len(seq)-1, via U_h = s_h * U_{h-1} + 1."""
    out = [r]
    for sk in seq[1:]:
        out.append(out[-1] * sk + 1)
    return out


def _g(U: int, t: int, p: int) -> CertReal:
    """``U + log2(2**(1/t) - 1)``: log2 of the gap above 2**U when the tail is 1/t."""
    return cr_log2(cr_exp2m1(CertReal.exact(Fraction(1, t), p))) + U


def _passes(U: int, t: int, phi: Phi, N: int, start: int, cap: int) -> BoundVerdict:
    def attempt(p: int) -> BoundVerdict:
        v = compare(_g(U, t, p), phi.log2_at(N, p))
        if v is BoundVerdict.UNDECIDED:
            raise Undecided("step inequality undecided", p)
        return v

    try:
        return refine(attempt, start, cap)
    except Undecided:
        return BoundVerdict.UNDECIDED


def _exact_step(U: int, N: int, floor_t: int, phi: Phi, prec: int, cap: int) -> tuple[int, BoundVerdict | None]:
    """Least t >= floor_t with the step inequality, and the verdict for t - 1."""

    def T(p: int) -> CertReal:
        a = phi.log2_at(N, p) - U
        return cr_const_log2(p) / cr_log1p(cr_exp2(a))

    try:
        t = max(refine(lambda p: cr_ceil(T(p)), prec, cap), floor_t)
    except Undecided:
        # T is (numerically) an integer; the inequality holds with equality there
        t = max(refine(lambda p: floor_int(T(p).mid), prec, cap), floor_t)
    while _passes(U, t, phi, N, prec, cap) is not BoundVerdict.LE:
        t += 1
    below = None
    if t > floor_t:
        below = _passes(U, t - 1, phi, N, prec, cap)
        while below is BoundVerdict.LE:
            t -= 1
            below = _passes(U, t - 1, phi, N, prec, cap) if t > floor_t else None
    return t, below


_MANTISSA_BITS = 64
_EXPAND_SHIFT = 1 << 12


def _scaled_step(U: int, N: int, phi: Phi, prec: int, cap: int) -> tuple[ScaledInt, ScaledInt]:
    """An admissible t written as mantissa * 2**shift + 1, plus a lower bound on the least one.

    For 2**a = phi / 2**U tiny, the least t is ln2 * 2**-a + O(1); the mantissa
    carries the leading bits of ln2 * 2**frac(-a), rounded up with one unit to spare.
    """

    def attempt(p: int):
        neg_a = -(phi.log2_at(N, p) - U)
        K = cr_floor(neg_a)
        g = neg_a - K
        P = min(_MANTISSA_BITS, K)
        # the extra 2**(2**-(K - P)) pays for the slack in the loose check below
        x_hi = CertReal.exact(1, p).mul_2exp(-min(K - P, _TINY_EXP))
        lead = (cr_const_log2(p) * cr_exp2(g + x_hi)).mul_2exp(P)
        return K, P, ceil_int(lead.hi) + 1, floor_int(lead.lo)

    K, P, m_hi, m_lo = refine(attempt, prec, cap)
    return ScaledInt(m_hi, K - P, 1), ScaledInt(m_lo, K - P, 0)


def _scaled_passes(U: int, t: ScaledInt, phi: Phi, N: int, start: int, cap: int) -> BoundVerdict:
    """Step inequality for a scaled t, using log2(2**x - 1) <= log2(x) + log2(ln 2) + x."""
    exact = t.expand()
    if exact is not None:
        return _passes(U, exact, phi, N, start, cap)

    def attempt(p: int) -> BoundVerdict:
        m = CertReal.exact(t.mantissa, p)
        x_hi = CertReal.exact(1, p).mul_2exp(-min(t.shift, _TINY_EXP))
        g_hi = cr_log2(cr_const_log2(p)) - cr_log2(m) + (U - t.shift) + x_hi
        v = compare(g_hi, phi.log2_at(N, p))
        if v is BoundVerdict.UNDECIDED:
            raise Undecided("scaled step undecided", p)
        return v

    try:
        return refine(attempt, start, cap)
    except Undecided:
        return BoundVerdict.UNDECIDED


def construct_theta(
    phi: Phi,
    r: int,
    s: int,
    H: int,
    prec: int = DEFAULT_PREC,
    prec_cap: int = PREC_CAP,
    seq_cap: int = SEQ_CAP,
    allow_scaled: bool = True,
) -> ThetaSeq:
    """Greedy minimal sequence s_0 = s <= s_1 <= ... <= s_H.

    Each s_{h+1} is the least value >= s_h with
    ``2**U_h * (2**(1/(s_{h+1}-1)) - 1) <= phi(2**N_h)``.  A term beyond
    ``seq_cap`` is stored as a ScaledInt when ``allow_scaled`` holds (admissible
    but only minimal to within its mantissa precision); nothing can follow it.
    """
    if r < 1 or s < 2 or H < 1:
        raise ValueError("need r >= 1, s >= 2 and H >= 1")
    seq: list = [s]
    steps: list[Step] = []
    notes: list[str] = []
    for h in range(H):
        if isinstance(seq[-1], ScaledInt):
            raise NotRepresentable(f"s_{h} is held in scaled form, so U and N at level {h} cannot be formed")
        U = U_values(r, seq[: h + 1])[h]
        N = math.prod(seq)
        L = phi.log2_at(N, prec)
        a = L - U
        if a.lo >= -_EXPAND_SHIFT:
            t, below = _exact_step(U, N, seq[-1] - 1, phi, prec, prec_cap)
            if t + 1 <= seq_cap or allow_scaled:
                seq.append(t + 1)
                steps.append(Step(h, U, N, L, t + 1, True, below, t + 1))
                if t + 1 > seq_cap:
                    notes.append(f"s_{h + 1} exceeds the sequence cap; kept as an exact integer")
                continue
            raise CapExceeded(f"no admissible s_{h + 1} at or below the sequence cap {seq_cap}")
        if not allow_scaled:
            raise CapExceeded(f"no admissible s_{h + 1} at or below the sequence cap {seq_cap}")
        t_s, t_lo = _scaled_step(U, N, phi, prec, prec_cap)
        if _scaled_passes(U, t_s, phi, N, prec, prec_cap) is not BoundVerdict.LE:
            raise Undecided(f"scaled s_{h + 1} could not be certified", prec_cap)
        chosen = ScaledInt(t_s.mantissa, t_s.shift, t_s.addend + 1)
        lower = ScaledInt(t_lo.mantissa, t_lo.shift, 1)
        seq.append(chosen)
        steps.append(Step(h, U, N, L, chosen, False, None, lower))
        notes.append(f"s_{h + 1} exceeds the sequence cap; stored scaled, minimal only to {_MANTISSA_BITS} bits")
    theta, bounds = _theta_enclosure(r, seq, prec)
    return ThetaSeq(r, s, phi, tuple(seq), tuple(steps), theta, bounds, tuple(notes))


def _theta_enclosure(r: int, seq: list, prec: int) -> tuple[CertReal, tuple[Fraction, Fraction] | None]:
    exact_terms = [x for x in seq if isinstance(x, int)]
    prod = 1
    partial = Fraction(0)
    for i, sk in enumerate(exact_terms):
        prod *= sk
        partial += Fraction(r if i == 0 else 1, prod)
    if len(exact_terms) == len(seq):
        hi = partial + Fraction(1, prod * (seq[-1] - 1))
        return CertReal.from_bounds(CertReal.exact(partial, prec).lo, CertReal.exact(hi, prec).hi, prec), (partial, hi)
    last = seq[-1]
    tail = CertReal.exact(Fraction(1, prod), prec).mul_2exp(-min(last.shift, _TINY_EXP))
    hi = CertReal.exact(partial, prec) + tail
    return CertReal.from_bounds(CertReal.exact(partial, prec).lo, hi.hi, prec), None


@dataclass(frozen=True)
class WitnessResult:
    h: int
    N: int
    U: int
    log2_dist: CertReal
    dist: CertReal | None
    log2_phi: CertReal
    positive: bool
    verdict: BoundVerdict


def _log2_gap(U: int, nxt, prec: int) -> CertReal:
    """Enclosure of ``U + log2(2**tail - 1)`` with tail in [1/s, 1/(s-1)], s = nxt."""
    if isinstance(nxt, ScaledInt) and nxt.expand() is not None:
        nxt = nxt.expand()
    if isinstance(nxt, int):
        lo = _g(U, nxt, prec)
        hi = _g(U, nxt - 1, prec)
        return CertReal.from_bounds(lo.lo, hi.hi, prec)
    ln2 = cr_log2(cr_const_log2(prec))
    m = CertReal.exact(nxt.mantissa, prec)
    x_hi = CertReal.exact(1, prec).mul_2exp(-min(nxt.shift, _TINY_EXP))
    # s <= (m + 1) 2**shift gives tail >= 2**-shift / (m + 1)
    lo = ln2 - cr_log2(m + 1) + (U - nxt.shift)
    hi = ln2 - cr_log2(m) + (U - nxt.shift) + x_hi
    return CertReal.from_bounds(lo.lo, hi.hi, prec)


def verify_witness(t: ThetaSeq, h: int, prec: int = DEFAULT_PREC, prec_cap: int = PREC_CAP) -> WitnessResult:
    """Certify ``0 < ||(2**N_h)**theta|| <= phi(2**N_h)`` through ``2**U_h * (2**tail - 1)``."""
    if not 0 <= h < t.depth:
        raise ValueError(f"level {h} needs s_{h + 1}; the prefix has depth {t.depth}")
    step = t.steps[h]
    nxt = t.seq[h + 1]
    out: list = []

    def attempt(p: int) -> BoundVerdict:
        lg = _log2_gap(step.U, nxt, p)
        L = t.phi.log2_at(step.N, p)
        # n**theta = 2**U + gap; below 1/2 the distance is the gap, below 1 it is 1 - gap
        if compare(lg, -1) is BoundVerdict.LE:
            out[:] = [lg, L, lg]
            v = compare(lg, L)
        elif lg.hi < 0:
            ld = cr_log2(1 - cr_exp2(lg))
            out[:] = [lg, L, ld]
            v = compare(ld, L)
        elif lg.lo >= 0:
            out[:] = [lg, L, None]
            return BoundVerdict.UNDECIDED  # the gap alone does not fix the fractional part
        else:
            raise Undecided("witness undecided", p)
        if v is BoundVerdict.UNDECIDED:
            raise Undecided("witness undecided", p)
        return v

    try:
        verdict = refine(attempt, prec, prec_cap)
    except Undecided:
        verdict = BoundVerdict.UNDECIDED
    if not out:
        lg = _log2_gap(step.U, nxt, prec)
        out[:] = [lg, t.phi.log2_at(step.N, prec), None]
    lg, L, ld = out
    dist = cr_exp2(ld) if ld is not None and abs(ld.mid) < _TINY_EXP else None
    # a finite lower bound on log2 of the distance means it is certified nonzero
    positive = ld is not None and bool(gmpy2.is_finite(ld.lo))
    if not positive and verdict is BoundVerdict.LE:
        verdict = BoundVerdict.UNDECIDED
    return WitnessResult(h, step.N, step.U, ld if ld is not None else lg, dist, L, positive, verdict)


# serialisation --------------------------------------------------------------------------
def _term_json(x) -> str | dict:
    return x.to_json() if isinstance(x, ScaledInt) else str(x)


def _term_from(v) -> int | ScaledInt:
    if isinstance(v, dict):
        return ScaledInt(int(v["mantissa"]), int(v["shift"]), int(v["addend"]))
    return int(v)


def theta_seq_to_json(t: ThetaSeq) -> dict:
    """Exact data as decimal strings; U and N are included for inspection and checked on load."""
    return {
        "phi": str(t.phi),
        "r": str(t.r),
        "s": str(t.s),
        "seq": [_term_json(x) for x in t.seq],
        "steps": [
            {
                "h": st.h,
                "U": str(st.U),
                "N": str(st.N),
                "minimal": st.minimal,
                "below": None if st.below is None else st.below.value,
                "lower": _term_json(st.lower),
            }
            for st in t.steps
        ],
        "notes": list(t.notes),
    }


def theta_seq_from_json(data: dict, prec: int = DEFAULT_PREC) -> ThetaSeq:
    phi = parse_phi(data["phi"])
    r, s = int(data["r"]), int(data["s"])
    seq = [_term_from(v) for v in data["seq"]]
    if seq[0] != s or any(isinstance(x, ScaledInt) for x in seq[:-1]):
        raise ValueError("malformed sequence")
    if any(b < a for a, b in zip(seq, seq[1:]) if isinstance(b, int)):
        raise ValueError("sequence must be nondecreasing")
    steps = []
    for h, st in enumerate(data["steps"]):
        U = U_values(r, seq[: h + 1])[h]
        N = math.prod(seq[: h + 1])
        if str(U) != st["U"] or str(N) != st["N"]:
            raise ValueError(f"stored U or N at level {h} does not match the sequence")
        below = None if st["below"] is None else BoundVerdict(st["below"])
        steps.append(Step(h, U, N, phi.log2_at(N, prec), seq[h + 1], st["minimal"], below, _term_from(st["lower"])))
    theta, bounds = _theta_enclosure(r, seq, prec)
    return ThetaSeq(r, s, phi, tuple(seq), tuple(steps), theta, bounds, tuple(data.get("notes", ())))
