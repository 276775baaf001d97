import math
from fractions import Fraction

import pytest
from hypothesis import assume, given
import hypothesis.strategies as st

from ivalkit import classical as cl
from ivalkit.classical import EMPTY, ENTIRE, Box, Interval
from conftest import intervals, members, nonzero_intervals

Iv = Interval


def test_construction_rejects_bad_endpoints():
    with pytest.raises(cl.IntervalError):
        Iv(2, 1)
    with pytest.raises(cl.IntervalError):
        Iv(math.nan, 1)
    assert ENTIRE.is_entire and not ENTIRE.is_finite


def test_add_sub_examples():
    assert cl.add(Iv(1, 2), Iv(3, 4)) == Iv(4, 6)
    assert cl.add(Iv(-1, 1), Iv(0, 0)) == Iv(-1, 1)
    assert cl.sub(Iv(1, 2), Iv(3, 4)) == Iv(-3, -1)
    x = Iv(-1, 1)
    assert cl.sub(x, x) == Iv(-2, 2)


def test_add_inexact_endpoints_bracket_exact_sum():
    s = cl.add(Iv.point(0.1), Iv.point(0.2))
    exact = Fraction(0.1) + Fraction(0.2)
    assert Fraction(s.lo) < exact < Fraction(s.hi)
    assert s.hi - s.lo <= 2 * math.ulp(0.3)


def test_mul_examples():
    assert cl.mul(Iv(-1, 1), Iv(-1, 1)) == Iv(-1, 1)
    assert cl.mul(Iv(-1.5, 0.5), Iv(-1.5, 0.5)) == Iv(-0.75, 2.25)
    prod = cl.mul(Iv(0.7, 1.3), Iv(-0.3, 0.3))
    exact = Fraction(1.3) * Fraction(0.3)
    assert Fraction(prod.lo) <= -exact and exact <= Fraction(prod.hi)
    assert math.isclose(prod.hi, 0.39, rel_tol=1e-15)


def test_div_examples():
    q = cl.div(Iv(1, 1), Iv(1, 3))
    assert q.hi == 1.0 and Fraction(q.lo) < Fraction(1, 3) and q.lo == math.nextafter(1 / 3, 0) or q.lo <= 1 / 3
    q = cl.div(Iv(-14, -7), Iv(0.7, 1.3))
    assert Fraction(q.lo) <= Fraction(-14) / Fraction(0.7)
    assert math.isclose(q.lo, -20.0, rel_tol=1e-15)
    assert Fraction(q.hi) >= Fraction(-7) / Fraction(1.3)
    with pytest.raises(cl.ZeroInDenominator):
        cl.div(Iv(1, 2), Iv(0, 1))


def test_sqr_is_dependent():
    assert cl.sqr(Iv(-1.5, 0.5)) == Iv(0, 2.25)
    assert cl.sqr(Iv(-1, 1)) == Iv(0, 1)
    assert cl.sqr(Iv(2, 3)) == Iv(4, 9)


def test_characteristics():
    assert cl.dev(Iv(-3, 2)) == -3 and cl.dev(Iv(-2, 3)) == 3
    assert cl.mignitude(Iv(-1, 2)) == 0 and cl.mignitude(Iv(2, 5)) == 2
    assert cl.magnitude(Iv(-3, 2)) == 3
    assert cl.wid(Iv(1, 4)) == 3 and cl.rad(Iv(1, 4)) == 1.5 and cl.mid(Iv(1, 4)) == 2.5
    with pytest.raises(cl.IntervalError):
        cl.mid(ENTIRE)
    with pytest.raises(cl.IntervalError):
        cl.rad(Iv(0, math.inf))


def test_chi_examples():
    assert cl.chi(Iv(1, 2)) == 0.5
    assert cl.chi(Iv(-1, 1)) == -1
    assert cl.chi(Iv(-2, 1)) == -0.5
    with pytest.raises(cl.DegenerateZero):
        cl.chi(Iv(0, 0))


def test_set_operations():
    assert cl.hull(Iv(0, 1), Iv(2, 3)) == Iv(0, 3)
    assert cl.intersect(Iv(0, 2), Iv(1, 3)) == Iv(1, 2)
    assert cl.intersect(Iv(0, 1), Iv(2, 3)) is EMPTY
    assert cl.contains(Iv(0, 1), EMPTY)
    assert cl.is_zero_containing(Iv(-1, 0)) and not cl.is_zero_containing(Iv(1, 2))


def test_box():
    box = Box([Iv(0, 1), Iv(2, 3)])
    assert box.contains([0.5, 2.5]) and not box.contains([0.5, 4])
    assert box.widths() == (1.0, 1.0)
    with pytest.raises(cl.IntervalError):
        Box([])


@given(intervals())
def test_text_round_trip(a):
    assert cl.parse_interval(cl.format_interval(a)) == a


OPS = {
    "add": (cl.add, lambda x, y: x + y),
    "sub": (cl.sub, lambda x, y: x - y),
    "mul": (cl.mul, lambda x, y: x * y),
    "div": (cl.div, lambda x, y: x / y),
}


@pytest.mark.parametrize("op", sorted(OPS))
@given(a=intervals(), b=intervals(), c=nonzero_intervals())
def test_soundness_against_exact_members(op, a, b, c):
    f, exact = OPS[op]
    rhs = c if op == "div" else b
    r = f(a, rhs)
    for x in members(a):
        for y in members(rhs):
            v = exact(Fraction(x), Fraction(y))
            assert Fraction(r.lo) <= v <= Fraction(r.hi)


def _nondegenerate(a: Interval) -> bool:
    return a.lo != a.hi and not (a.lo == 0.0 and a.hi == 0.0)


@given(a=intervals(-1e3, 1e3), b=intervals(-1e3, 1e3))
def test_chi_of_product_is_min(a, b):
    assume(_nondegenerate(a) and _nondegenerate(b))
    assume(cl.magnitude(a) > 1e-100 and cl.magnitude(b) > 1e-100)
    ca, cb = cl.chi(a), cl.chi(b)
    got = cl.chi(cl.mul(a, b))
    want = min(ca, cb, ca * cb)
    assert math.isclose(got, want, rel_tol=1e-12, abs_tol=1e-12)


@given(a=intervals(-1e3, 1e3), b=intervals(-1e3, 1e3))
def test_width_identity(a, b):
    assume(_nondegenerate(a) and _nondegenerate(b))
    p = cl.mul(a, b)
    want = cl.magnitude(a) * cl.magnitude(b) * (1 - cl.chi(p))
    assert math.isclose(cl.wid(p), want, rel_tol=1e-12, abs_tol=1e-300)


@given(a=intervals(-1e3, 1e3).filter(lambda a: a.is_finite), b=intervals(-1e3, 1e3))
def test_radius_bounds_of_product(a, b):
    ra, rb = Fraction(a.hi - a.lo) / 2, Fraction(b.hi - b.lo) / 2
    ma, mb = Fraction(cl.magnitude(a)), Fraction(cl.magnitude(b))
    p = cl.mul(a, b)
    rp = Fraction(p.hi) / 2 - Fraction(p.lo) / 2
    slack = Fraction(4 * math.ulp(max(abs(p.lo), abs(p.hi), 1e-300)))
    assert max(ma * rb, ra * mb) <= rp + slack
    assert rp <= ma * rb + ra * mb + slack


@given(a=st.tuples(st.integers(-2**20, 2**20), st.integers(-2**20, 2**20)),
       b=st.tuples(st.integers(-2**20, 2**20), st.integers(-2**20, 2**20)))
def test_radius_additive_for_dyadic_endpoints(a, b):
    x = Iv(min(a) / 8, max(a) / 8)
    y = Iv(min(b) / 8, max(b) / 8)
    assert cl.rad(cl.add(x, y)) == cl.rad(x) + cl.rad(y)
    assert cl.rad(cl.sub(x, y)) == cl.rad(x) + cl.rad(y)
    assert cl.wid(cl.sub(x, y)) == cl.wid(x) + cl.wid(y)


@given(b=intervals(-1e3, 1e3))
def test_only_unit_intervals_never_widen(b):
    # a factor outside [0, 1] and [-1, 0] widens some interval
    probes = [Iv(1, 1), Iv(0, 1), Iv(1, 2)]
    widens = any(cl.wid(cl.mul(a, b)) > cl.wid(a) for a in probes)
    unit = (0.0 <= b.lo and b.hi <= 1.0) or (-1.0 <= b.lo and b.hi <= 0.0)
    assert widens or unit


@given(a=intervals(0.0, 1e3), b=intervals(0.0, 1.0), neg=st.booleans())
def test_unit_factor_keeps_width_of_nonnegative_zero_anchored_interval(a, b, neg):
    a = Iv(0.0, a.hi)
    if neg:
        b = cl.neg(b)
    assert cl.wid(cl.mul(a, b)) <= cl.wid(a)


@given(a=nonzero_intervals(1e-3, 1e3))
def test_reciprocal_radius(a):
    # rad(1/a) = rad(a) / (|a| <a>) for intervals away from zero
    r = cl.div(Iv.point(1.0), a)
    want = cl.rad(a) / (cl.magnitude(a) * cl.mignitude(a))
    assert math.isclose(cl.rad(r), want, rel_tol=1e-12, abs_tol=2 * math.ulp(cl.magnitude(r)))
