from fractions import Fraction

import mpmath
import pytest

from helpers import encloses
from theta_powers.caps import CapExceeded
from theta_powers.certreal import BoundVerdict, compare, dist_nearest_int
from theta_powers.radical import (
    RadicalSum,
    build_basis,
    eval_radical_sum,
    find_small_fracpart,
    frac64,
    min_nonzero_dist_oracle,
)


@pytest.mark.parametrize("d,xi,elems", [(2, 2, (2, 3, 6)), (2, 1, (2,)), (3, 1, (2, 4)), (3, 2, (2, 3, 4, 6, 9, 12, 18, 36))])
def test_basis_examples(d, xi, elems):
    b = build_basis(d, xi)
    assert b.elements == elems
    assert b.size == d**xi - 1
    assert all(b.modulus % f == 0 for f in b.elements)


def test_basis_cap():
    with pytest.raises(CapExceeded):
        build_basis(2, 7)
    with pytest.raises(ValueError):
        build_basis(1, 1)


def test_frac64_matches_reference():
    mpmath.mp.prec = 200
    for f, d in [(2, 2), (3, 2), (6, 2), (2, 3), (36, 3)]:
        ref = mpmath.root(f, d)
        assert frac64(f, d) == int(mpmath.floor((ref - mpmath.floor(ref)) * 2**64))


def test_eval_examples():
    b1, b2 = build_basis(2, 1), build_basis(2, 2)
    mpmath.mp.prec = 400
    assert encloses(eval_radical_sum(RadicalSum.from_map(b1, {2: 1}, 1), 128), mpmath.sqrt(2) - 1)
    w = RadicalSum.from_map(b2, {2: 1, 3: 1, 6: -1})
    v = eval_radical_sum(w, 128)
    assert encloses(v, mpmath.sqrt(2) + mpmath.sqrt(3) - mpmath.sqrt(6))
    assert abs(float(v) - 0.6967746) < 1e-6
    z = eval_radical_sum(RadicalSum.zero(b2), 128)
    assert z.is_exact and z.mid == 0


def test_radical_sum_algebra():
    b = build_basis(2, 2)
    x = RadicalSum.from_map(b, {2: 1, 6: -3}, 2)
    y = RadicalSum.from_map(b, {3: 4}, -1)
    assert (x + y).coeff_map == {2: 1, 3: 4, 6: -3} and (x + y).offset == 1
    assert (x - x).is_nonzero is False
    assert x.scale(-2).coeff_map == {2: -2, 6: 6} and x.scale(-2).offset == -4
    assert x.height == 3 and RadicalSum.zero(b).height == 0
    with pytest.raises(ValueError):
        RadicalSum.from_map(b, {5: 1})


def test_form_matches_value():
    b = build_basis(2, 2)
    w = RadicalSum.from_map(b, {2: 2, 3: -1}, 1)
    f = w.form()
    assert f.rational == -1 and not f.is_rational


@pytest.mark.parametrize("n,value", [(12, 0.0294), (5, 0.0711)])
def test_pigeonhole_single_root(n, value):
    b = build_basis(2, 1)
    w = find_small_fracpart(b, n)
    v = eval_radical_sum(w, 128)
    assert w.height == n and w.is_nonzero
    assert v.positive() and compare(v, Fraction(1, n)) is BoundVerdict.LE
    assert abs(float(v) - value) < 1e-4


def test_pigeonhole_two_primes():
    b = build_basis(2, 2)
    w = find_small_fracpart(b, 4)
    v = eval_radical_sum(w, 128)
    assert w.height <= 4 and v.positive()
    assert compare(v, Fraction(1, 64)) is BoundVerdict.LE


def test_pigeonhole_cap():
    with pytest.raises(CapExceeded):
        find_small_fracpart(build_basis(2, 2), 500, enum_cap=1000)


@pytest.mark.parametrize("n,c,dist", [(1, 1, 0.41421), (2, 2, 0.17157), (10, 5, 0.07107)])
def test_oracle_examples(n, c, dist):
    w, dmin = min_nonzero_dist_oracle(build_basis(2, 1), n)
    assert w.coeff_map == {2: c}
    assert abs(float(dmin) - dist) < 1e-5
    assert dmin.positive()


def test_oracle_against_brute_force():
    mpmath.mp.prec = 200
    for n in (3, 7, 29, 70):
        best = min(abs(c * mpmath.sqrt(2) - mpmath.nint(c * mpmath.sqrt(2))) for c in range(1, n + 1))
        _, d = min_nonzero_dist_oracle(build_basis(2, 1), n)
        assert encloses(d, best)


def test_oracle_two_primes_brute_force():
    mpmath.mp.prec = 200
    b = build_basis(2, 2)
    n = 3
    r = [mpmath.sqrt(f) for f in b.elements]
    best = min(
        abs(s - mpmath.nint(s))
        for c in __import__("itertools").product(range(-n, n + 1), repeat=3)
        if any(c)
        for s in [sum(ci * ri for ci, ri in zip(c, r))]
    )
    w, d = min_nonzero_dist_oracle(b, n)
    assert encloses(d, best) and w.height <= n


def test_oracle_dominates_search():
    for basis, n in [(build_basis(2, 1), 12), (build_basis(2, 1), 100), (build_basis(2, 2), 4)]:
        _, d = min_nonzero_dist_oracle(basis, n)
        v = eval_radical_sum(find_small_fracpart(basis, n), 128)
        assert compare(d, dist_nearest_int(v).distance.hi) is BoundVerdict.LE


def test_single_root_minimisers_are_pell_numbers():
    pell = [1, 2]
    while pell[-1] < 5000:
        pell.append(2 * pell[-1] + pell[-2])
    basis = build_basis(2, 1)
    for e in range(1, 13):
        n = 2**e
        w, dist = min_nonzero_dist_oracle(basis, n)
        assert w.coeff_map == {2: max(p for p in pell if p <= n)}
        # observed range of n * ||c sqrt 2|| over these n
        assert 0.34 <= float(dist.mid) * n <= 0.79
