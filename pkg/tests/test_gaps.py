import math
import random
from fractions import Fraction

import mpmath
import pytest
from hypothesis import given, strategies as st

from helpers import encloses
from theta_powers.caps import CapExceeded
from theta_powers.certreal import BoundVerdict, CertReal, compare
from theta_powers.gaps import (
    Regime,
    approx_two_powers,
    calibrated_gap_constant,
    calibrated_two_powers_constant,
    gap_bound,
    NoBracket,
    gap_element,
    ge2_bound,
    ge2_bound_corrected,
    next_gaps,
    oracle_next_element,
    power_sum,
    psi,
    regime,
    solve_k_theta,
)

F = Fraction


def mp_pow(u, q):
    q = F(q)
    return mpmath.root(mpmath.mpf(u), q.denominator) ** q.numerator


def mp_frac(q):
    q = F(q)
    return mpmath.mpf(q.numerator) / q.denominator


@pytest.mark.parametrize(
    "theta,value",
    [("2", F(1, 4)), ("3/2", 0), ("1", 0), ("1/2", -2), ("3", F(4, 9)), ("1/3", F(-7, 2)), ("6/5", F(-1, 4))],
)
def test_psi(theta, value):
    assert psi(theta) == value


def test_regimes():
    assert regime(F(1, 2)) is Regime.SUB1
    assert regime(F(1)) is Regime.ONE
    assert regime(F(3, 2)) is Regime.SUPER1
    assert regime(F(2)) is Regime.GE2


# internals --------------------------------------------------------------------------------
def test_k_theta_three_halves():
    g = solve_k_theta("3/2", "20")
    assert g.s == 4 and g.E.mid == 4 and g.E.is_exact
    assert g.k.hi - g.k.lo < F(1, 4)
    true_k = mpmath.findroot(lambda t: (4 + t) ** 1.5 + (4 - t) ** 1.5 - 20, 3.19)
    assert 3.18 <= true_k <= 3.20
    assert encloses(g.k, true_k)
    assert g.l == 4


@pytest.mark.parametrize("theta,x,s", [("3/2", "16", 4), ("1/2", "10", 25)])
def test_k_theta_zero_error(theta, x, s):
    g = solve_k_theta(theta, x)
    assert g.s == s and g.E.mid == 0 and g.k.mid == 0 and g.l == 0


@pytest.mark.parametrize("theta", ["0.3", "0.7", "1.2", "1.8"])
def test_error_sign_and_size(theta):
    th = F(theta)
    worst_e, worst_k = 0.0, 0.0
    for x in [30 * 1.1**i for i in range(0, 62, 4)]:
        xs = f"{x:.4f}"
        g = solve_k_theta(th, xs)
        if th < 1:
            assert g.E.hi <= 0
        else:
            assert g.E.lo >= 0
        assert 0 <= g.l <= g.s
        xf = float(xs)
        worst_e = max(worst_e, abs(float(g.E.mid)) * xf ** (1 / float(th) - 1))
        worst_k = max(worst_k, float(g.k.hi) * xf ** (-1 / (2 * float(th))))
    # empirical corridors, generous against the grid maxima
    assert worst_e < 8
    assert worst_k < 4


def test_small_x_has_no_bracket_but_gap_still_works():
    with pytest.raises(NoBracket):
        solve_k_theta("1.2", "20")
    w = gap_element("1.2", "20")
    assert w.path != "construction" and w.value.lo >= 20


@pytest.mark.parametrize("theta,x", [("0.3", "500"), ("1.2", "800"), ("1.8", "3000")])
def test_pair_sum_monotone_in_t(theta, x):
    g = solve_k_theta(theta, x)
    th = mp_frac(F(theta))
    vals = [(g.s + t) ** th + (g.s - t) ** th for t in mpmath.linspace(0, g.s, 40)]
    diffs = [b - a for a, b in zip(vals, vals[1:])]
    if F(theta) < 1:
        assert all(d < 0 for d in diffs)
    else:
        assert all(d > 0 for d in diffs)


# witnesses --------------------------------------------------------------------------------
def test_gap_two_squares():
    w = gap_element("2", "103")
    assert (w.u, w.v) == (2, 10) and w.value.mid == 104
    assert compare(w.slack, ge2_bound(F(2), F(103))) is BoundVerdict.LE
    assert abs(float(ge2_bound(F(2), F(103)).mid) - 2**1.5 * 103**0.25) < 1e-9


def test_gap_three_halves():
    w = gap_element("3/2", "20")
    assert (w.u, w.v) == (8, 0)
    assert abs(float(w.value.mid) - 22.627417) < 1e-6


def test_gap_linear():
    w = gap_element("1", "7.3")
    assert w.u + w.v == 8 and w.value.mid == 8 and w.regime is Regime.ONE


@given(
    st.sampled_from(["1/3", "1/2", "0.7", "1.2", "3/2", "1.8", "2", "5/2", "3"]),
    st.integers(min_value=10, max_value=10**5),
    st.integers(min_value=0, max_value=999),
)
def test_witness_value_at_least_x(theta, whole, frac):
    x = F(whole) + F(frac, 1000)
    w = gap_element(theta, x)
    assert w.value.lo >= x
    assert w.u >= 0 and w.v >= 0 and w.u + w.v > 0
    assert encloses(w.value, mp_pow(w.u, theta) + mp_pow(w.v, theta))


@pytest.mark.parametrize("theta", ["1/2", "3/2", "1/3", "0.7", "1.2"])
def test_witness_within_calibrated_bound(theta):
    for i in range(0, 200, 7):
        x = f"{100 * 100 ** (i / 199):.6f}"
        w = gap_element(theta, x)
        assert compare(w.slack, gap_bound(theta, x)) is BoundVerdict.LE


def test_frozen_gap_constants():
    assert calibrated_gap_constant(F(1, 2)) == F(23759, 6250)
    assert calibrated_gap_constant(F(3, 2)) == F(299099, 100000)
    assert calibrated_gap_constant(F(1, 3)) == F(10667, 1250)
    assert calibrated_gap_constant(F(1)) == 1
    with pytest.raises(ValueError):
        calibrated_gap_constant(F(2))


# oracle -----------------------------------------------------------------------------------
@pytest.mark.parametrize(
    "theta,x,cap,pair,value",
    [("3/2", "20", 10, (2, 7), 21.348686), ("2", "100", 12, (6, 8), 100), ("2", "103", 12, (2, 10), 104)],
)
def test_oracle_examples(theta, x, cap, pair, value):
    u, v, val = oracle_next_element(theta, x, cap)
    assert (u, v) == pair
    assert abs(float(val.mid) - value) < 1e-6


def test_oracle_cap_too_small():
    with pytest.raises(ValueError):
        oracle_next_element("2", "1000", 5)


def test_oracle_enumeration_cap():
    with pytest.raises(CapExceeded):
        oracle_next_element("0.3", "500")


def _brute_next(theta, x, cap):
    xm = mp_frac(x)
    return min(v for u in range(cap + 1) for w in range(cap + 1) for v in [mp_pow(u, theta) + mp_pow(w, theta)] if v >= xm)


@pytest.mark.parametrize("theta,x", [("3/2", "57.5"), ("1/2", "5.3"), ("0.7", "12.2"), ("5/2", "400")])
def test_oracle_matches_brute_force(theta, x):
    u, v, val = oracle_next_element(theta, x)
    cap = int((F(x) * 2) ** (1 / F(theta))) + 3 if F(theta) < 1 else int(float(x) ** (1 / float(F(theta)))) + 3
    assert encloses(val, _brute_next(F(theta), F(x), cap))


@pytest.mark.parametrize(
    "theta,xs", [("1/2", ["37.25", "120", "333.3"]), ("3/2", ["37.25", "555.5", "2024"]), ("2", ["120", "2024"]), ("3", ["555.5", "2024"])]
)
def test_oracle_dominates_construction(theta, xs):
    for x in xs:
        u, v, val = oracle_next_element(theta, x)
        w = gap_element(theta, x)
        assert val.lo >= F(x)
        assert val.lo <= w.value.hi


def test_bambah_chowla_window():
    xs = range(1, 10**4 + 1)
    gaps = next_gaps("2", xs)
    for x, g in zip(xs, gaps):
        assert g < 2 * math.sqrt(2) * x**0.25 + 1


# two powers -------------------------------------------------------------------------------
def test_frozen_two_power_constants():
    assert calibrated_two_powers_constant(F(1, 2)) == F(93281, 2500)
    assert calibrated_two_powers_constant(F(6, 5)) == F(95441, 50000)
    assert calibrated_two_powers_constant(F(7, 5)) == F(185963, 250000)


def test_two_powers_perfect_squares():
    r = approx_two_powers("0.5", "0", 100)
    assert r.dist.mid == 0 and r.dist.is_exact
    s = math.isqrt(r.u) ** 2 == r.u and math.isqrt(r.v) ** 2 == r.v
    assert s


@pytest.mark.parametrize("theta,alpha,n", [("1.2", "0.3", 50), ("1.4", "0.9999", 40), ("0.5", "0.77", 300)])
def test_two_powers_bound(theta, alpha, n):
    r = approx_two_powers(theta, alpha, n)
    assert 1 <= r.u <= n and 1 <= r.v <= n
    assert r.verdict is BoundVerdict.LE
    s = mp_pow(r.u, theta) + mp_pow(r.v, theta) - mp_frac(F(alpha))
    assert encloses(r.dist, abs(s - mpmath.nint(s)))
    # never better than the exhaustive minimum
    best = min(
        abs(t - mpmath.nint(t))
        for a in range(1, n + 1)
        for b in range(a, n + 1)
        for t in [mp_pow(a, theta) + mp_pow(b, theta) - mp_frac(F(alpha))]
    ) if n <= 60 else 0
    assert r.dist.hi >= best - mpmath.mpf(10) ** -30


def test_two_powers_verdict_is_consistent_off_the_calibration_grid():
    # the frozen constant comes from n = 256; at n = 1000 it can be exceeded and must say so
    r = approx_two_powers("0.8", "1/3", 1000)
    assert r.verdict is compare(r.dist, r.bound)
    assert r.verdict is BoundVerdict.GT


def test_two_powers_rejects_excluded_exponents():
    for th in ("1", "3/2", "2"):
        with pytest.raises(ValueError):
            approx_two_powers(th, "0.5", 100)


def test_power_sum_exact_for_integer_exponent():
    assert power_sum([3, 4], F(2), 128).mid == 25
    assert isinstance(power_sum([3, 4], F(2), 128), CertReal)


def test_corrected_ge2_bound_holds():
    rng = random.Random(7)
    for th in ("2", "5/2", "3", "4"):
        for _ in range(300):
            x = F(f"{rng.uniform(10, 10**6):.6f}")
            w = gap_element(th, x)
            assert compare(w.slack, ge2_bound_corrected(F(th), x)) is BoundVerdict.LE
