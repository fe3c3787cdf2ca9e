from fractions import Fraction

import gmpy2
import mpmath
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import encloses, mpf
from theta_powers.certreal import (
    BoundVerdict,
    CertReal,
    CertRealError,
    NotPositiveError,
    Undecided,
    compare,
    cr_ceil,
    cr_exp,
    cr_exp2,
    cr_exp2m1,
    cr_floor,
    cr_from_decimal,
    cr_log,
    cr_log2,
    cr_pow,
    cr_root,
    cr_sqrt,
    dist_nearest_int,
    parse_rational,
    refine,
    to_fraction,
)

rationals = st.fractions(min_value=Fraction(-10**6), max_value=Fraction(10**6), max_denominator=10**6)
positives = st.fractions(min_value=Fraction(1, 10**6), max_value=Fraction(10**6), max_denominator=10**6)
precs = st.sampled_from([32, 53, 64, 128, 256, 512])


# construction -----------------------------------------------------------------------------
def test_decimal_half_is_exact():
    x = cr_from_decimal("0.5", 64)
    assert x.mid == gmpy2.mpfr("0.5") and x.rad == 0


def test_decimal_third_width():
    x = cr_from_decimal("1/3", 64)
    assert x.contains(Fraction(1, 3))
    assert to_fraction(x.hi) - to_fraction(x.lo) <= Fraction(1, 2**62)


def test_decimal_exponent_form_is_exact():
    x = cr_from_decimal("2.5e-1", 64)
    assert x.mid == gmpy2.mpfr("0.25") and x.rad == 0


@pytest.mark.parametrize("bad", ["", "abc", "1/0", "1//2", "0x10", "nan", "inf", "1/2/3"])
def test_malformed_decimal_rejected(bad):
    with pytest.raises((ValueError, ZeroDivisionError)):
        cr_from_decimal(bad, 64)


def test_low_precision_rejected():
    with pytest.raises(ValueError):
        cr_from_decimal("0.5", 16)


def test_float_input_rejected():
    with pytest.raises(TypeError):
        CertReal.exact(0.1)


def test_parse_rational_forms():
    assert parse_rational(" -3/6 ") == Fraction(-1, 2)
    assert parse_rational("1.25e2") == 125
    assert parse_rational("7") == 7


@given(rationals, precs)
def test_exact_encloses_value(q, p):
    x = CertReal.exact(q, p)
    assert x.contains(q)
    assert to_fraction(x.hi) - to_fraction(x.lo) <= abs(q) * Fraction(2, 2**p) + Fraction(1, 2**(p + 200))


# elementary functions ---------------------------------------------------------------------
def test_sqrt2_root():
    r = cr_root(CertReal.exact(2, 64), 2)
    assert encloses(r, mpmath.sqrt(2))
    assert r.rad <= gmpy2.mpfr(2) ** -60


def test_root_identities():
    one = cr_root(CertReal.exact(1, 64), 5)
    assert one.is_exact and one.mid == 1
    four = cr_root(CertReal.exact(64, 64), 3)
    assert four.contains(4) and four.rad <= gmpy2.mpfr(2) ** -60


def test_root_needs_positive():
    with pytest.raises(NotPositiveError):
        cr_root(CertReal.exact(-2, 64), 2)
    with pytest.raises(NotPositiveError):
        cr_pow(CertReal.from_bounds(gmpy2.mpfr(-1), gmpy2.mpfr(1), 64), CertReal.exact(2, 64))


def test_pow_examples():
    e = cr_pow(CertReal.exact(4, 64), CertReal.exact(Fraction(3, 2), 64))
    assert e.contains(8) and to_fraction(e.hi) - to_fraction(e.lo) <= Fraction(1, 2**50)
    one = cr_pow(CertReal.exact(2, 64), CertReal.exact(0, 64))
    assert one.is_exact and one.mid == 1
    a = cr_pow(CertReal.exact(10, 64), CertReal.exact(Fraction(1, 2), 64))
    assert a.intersects(cr_root(CertReal.exact(10, 64), 2))


def test_exp2_examples():
    assert cr_exp2(CertReal.exact(1, 64)).mid == 2 and cr_exp2(CertReal.exact(1, 64)).rad == 0
    assert cr_exp2(CertReal.exact(0, 64)).mid == 1
    x = cr_exp2(CertReal.exact(Fraction(1, 24), 128))
    assert encloses(x, mpmath.mpf(2) ** (mpmath.mpf(1) / 24))
    assert x.lo_str(5).startswith("1.029")


def test_exp2_overflow_is_reported():
    with pytest.raises(CertRealError):
        cr_exp2(CertReal.exact(2**40, 64))


@given(positives, precs)
def test_log_exp_sqrt_enclose_reference(q, p):
    x = CertReal.exact(q, p)
    ref = mpf(q)
    assert encloses(cr_log(x), mpmath.log(ref))
    assert encloses(cr_log2(x), mpmath.log(ref, 2))
    assert encloses(cr_sqrt(x), mpmath.sqrt(ref))
    small = CertReal.exact(q / 10**5, p)
    assert encloses(cr_exp(small), mpmath.exp(ref / 10**5))
    assert encloses(cr_exp2m1(small), mpmath.mpf(2) ** (ref / 10**5) - 1)


@given(positives, st.integers(2, 7), precs)
def test_root_power_roundtrip(q, d, p):
    x = CertReal.exact(q, p)
    r = cr_root(x, d)
    back = r
    for _ in range(d - 1):
        back = back * r
    assert back.contains(q)
    assert r.intersects(cr_pow(x, CertReal.exact(Fraction(1, d), p + 64)))


@given(positives, st.fractions(min_value=-5, max_value=5, max_denominator=50), precs)
def test_pow_encloses_reference(q, t, p):
    v = cr_pow(CertReal.exact(q, p), CertReal.exact(t, p))
    assert encloses(v, mpf(q) ** mpf(t))


@given(rationals, rationals, precs)
def test_arithmetic_encloses(a, b, p):
    x, y = CertReal.exact(a, p), CertReal.exact(b, p)
    assert (x + y).contains(a + b)
    assert (x - y).contains(a - b)
    assert (x * y).contains(a * b)
    if b != 0:
        assert (x / y).contains(a / b)


@given(positives, st.sampled_from([32, 64, 128]))
def test_refinement_nests(q, p):
    lo = cr_log(CertReal.exact(q, p))
    hi = cr_log(CertReal.exact(q, 2 * p))
    slack = abs(to_fraction(lo.mid)) * Fraction(4, 2**p) + Fraction(1, 2**(p + 40))
    assert to_fraction(hi.lo) >= to_fraction(lo.lo) - slack
    assert to_fraction(hi.hi) <= to_fraction(lo.hi) + slack


# comparisons and nearest integer ----------------------------------------------------------
def test_compare_verdicts():
    x = CertReal.exact(Fraction(1, 3), 64)
    assert compare(x, Fraction(1, 2)) is BoundVerdict.LE
    assert compare(x, Fraction(1, 4)) is BoundVerdict.GT
    assert compare(x, Fraction(1, 3)) is BoundVerdict.UNDECIDED


def test_dist_five_root_two():
    x = CertReal.from_bounds(gmpy2.mpfr("7.0710"), gmpy2.mpfr("7.0712"), 64)
    r = dist_nearest_int(x, Fraction(1, 10))
    assert r.verdict is BoundVerdict.LE and r.positive and r.nearest == 7
    assert abs(float(r.distance) - 0.0711) < 1e-3


def test_dist_half_integer():
    r = dist_nearest_int(CertReal.exact(Fraction(7, 2), 64), Fraction(1, 2))
    assert r.distance.contains(Fraction(1, 2)) and r.verdict is BoundVerdict.LE


def test_dist_integer_not_positive():
    r = dist_nearest_int(CertReal.exact(2, 64), Fraction(1, 10))
    assert r.distance.is_exact and r.distance.mid == 0
    assert r.verdict is BoundVerdict.LE and not r.positive


def test_dist_wide_interval_undecided():
    x = CertReal.from_bounds(gmpy2.mpfr(1), gmpy2.mpfr(2), 64)
    r = dist_nearest_int(x, Fraction(1, 10))
    assert r.verdict is BoundVerdict.UNDECIDED and r.nearest is None


@given(rationals, precs)
def test_dist_in_range_and_encloses(q, p):
    r = dist_nearest_int(CertReal.exact(q, p))
    true = abs(q - round(q))
    assert r.distance.contains(true)
    assert to_fraction(r.distance.lo) >= 0 and to_fraction(r.distance.hi) <= Fraction(1, 2) + Fraction(1, 2**(p - 20))


def test_floor_ceil_and_undecided():
    assert cr_floor(CertReal.exact(Fraction(7, 2), 64)) == 3
    assert cr_ceil(CertReal.exact(Fraction(7, 2), 64)) == 4
    with pytest.raises(Undecided):
        cr_floor(CertReal.from_bounds(gmpy2.mpfr("2.9"), gmpy2.mpfr("3.1"), 64))


def test_refine_doubles_until_decided():
    seen = []

    def fn(p):
        seen.append(p)
        if p < 512:
            raise Undecided("not yet", p)
        return p

    assert refine(fn, 128, 4096) == 512
    assert seen == [128, 256, 512]
    with pytest.raises(Undecided):
        refine(lambda p: (_ for _ in ()).throw(Undecided("never", p)), 128, 256)


def test_values_are_immutable():
    x = CertReal.exact(1, 64)
    with pytest.raises(AttributeError):
        x.rad = gmpy2.mpfr(1)
