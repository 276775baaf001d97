import math
import threading
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
import hypothesis.strategies as st

from ivalkit import rounding as rd
from conftest import any_finite

PAIRS = {
    "add": (rd.add_down, rd.add_up, lambda a, b: a + b),
    "sub": (rd.sub_down, rd.sub_up, lambda a, b: a - b),
    "mul": (rd.mul_down, rd.mul_up, lambda a, b: a * b),
    "div": (rd.div_down, rd.div_up, lambda a, b: a / b),
}


def _exact(op, a, b):
    return PAIRS[op][2](Fraction(a), Fraction(b))


def _check_tight(op, a, b):
    down, up = PAIRS[op][0](a, b), PAIRS[op][1](a, b)
    exact = _exact(op, a, b)
    if math.isfinite(down):
        assert Fraction(down) <= exact
        nxt = math.nextafter(down, math.inf)
        assert math.isinf(nxt) or Fraction(nxt) > exact
    else:
        assert down < 0 and exact < Fraction(rd.MAX_FLOAT)
    if math.isfinite(up):
        assert Fraction(up) >= exact
        prv = math.nextafter(up, -math.inf)
        assert math.isinf(prv) or Fraction(prv) < exact
    else:
        assert up > 0 and exact > -Fraction(rd.MAX_FLOAT)


def test_add_exact_case():
    assert rd.add_down(1.0, 2.0) == 3.0 == rd.add_up(1.0, 2.0)


def test_add_point_one_point_two_rounds_below_and_above():
    exact = Fraction(0.1) + Fraction(0.2)
    down, up = rd.add_down(0.1, 0.2), rd.add_up(0.1, 0.2)
    assert Fraction(down) < exact < Fraction(up)
    assert math.nextafter(down, 1.0) == up


def test_one_third():
    assert Fraction(rd.div_down(1.0, 3.0)) < Fraction(1, 3) < Fraction(rd.div_up(1.0, 3.0))
    assert rd.mul_up(3.0, rd.div_up(1.0, 3.0)) >= 1.0
    assert rd.mul_down(3.0, rd.div_down(1.0, 3.0)) <= 1.0


def test_identities():
    for x in (0.1, -7.25, 1e300, 5e-324):
        assert rd.add_down(x, 0.0) == x == rd.add_up(x, 0.0)
        assert rd.sub_down(x, x) == 0.0 == rd.sub_up(x, x)


@pytest.mark.parametrize("op", sorted(PAIRS))
def test_special_operands(op):
    specials = [0.0, 1.0, -1.0, 0.1, -0.1, 5e-324, -5e-324, 2.2250738585072014e-308, 1e-310]
    for a in specials:
        for b in specials:
            if op == "div" and b == 0.0:
                continue
            _check_tight(op, a, b)


@pytest.mark.parametrize("op", sorted(PAIRS))
@given(a=any_finite, b=any_finite)
def test_directed_results_bracket_and_are_tight(op, a, b):
    if op == "div" and b == 0.0:
        return
    _check_tight(op, a, b)


@given(a=any_finite, b=any_finite)
def test_gap_at_most_two_ulps(a, b):
    for op, (fdown, fup, _) in PAIRS.items():
        if op == "div" and b == 0.0:
            continue
        down, up = fdown(a, b), fup(a, b)
        if math.isfinite(down) and math.isfinite(up):
            exact = float(_exact(op, a, b))
            assert up - down <= 2 * rd.ulp(exact) if exact else up - down <= 5e-324 * 2


@given(x=st.floats(min_value=0.0, allow_infinity=False, allow_nan=False))
def test_sqrt_bracket(x):
    lo, hi = rd.sqrt_down(x), rd.sqrt_up(x)
    assert Fraction(lo) ** 2 <= Fraction(x) <= Fraction(hi) ** 2


def test_mode_stack_restores_previous():
    assert rd.current_mode() is rd.Mode.NEAREST_EVEN
    with rd.RoundingContext(rd.Mode.TOWARD_POS_INF):
        with rd.RoundingContext(rd.Mode.TOWARD_NEG_INF):
            assert rd.current_mode() is rd.Mode.TOWARD_NEG_INF
            assert rd.add(0.1, 0.2) == rd.add_down(0.1, 0.2)
        assert rd.current_mode() is rd.Mode.TOWARD_POS_INF
        assert rd.add(0.1, 0.2) == rd.add_up(0.1, 0.2)
    assert rd.current_mode() is rd.Mode.NEAREST_EVEN


def test_mode_stack_underflow_is_an_error():
    with pytest.raises(RuntimeError):
        rd.RoundingContext.pop()


def test_mode_is_thread_local():
    seen = []
    with rd.RoundingContext(rd.Mode.TOWARD_POS_INF):
        t = threading.Thread(target=lambda: seen.append(rd.current_mode()))
        t.start()
        t.join()
    assert seen == [rd.Mode.NEAREST_EVEN]


@pytest.mark.parametrize("backend", rd.available_backends())
def test_backends_agree(backend):
    previous = rd.get_backend()
    values = [(0.1, 0.2), (1e308, 1e308), (-3.0, 7.0), (1.0, 3.0), (5e-324, 0.5)]
    reference = {op: [(f(a, b), g(a, b)) for a, b in values] for op, (f, g, _) in PAIRS.items()}
    try:
        rd.set_backend(backend)
        for op, (f, g, _) in PAIRS.items():
            assert [(f(a, b), g(a, b)) for a, b in values] == reference[op]
    finally:
        rd.set_backend(previous)


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        rd.set_backend("no-such-backend")


def test_vector_kernels_bracket_exact_results():
    gen = np.random.default_rng(3)
    a = gen.uniform(-10, 10, 2000) * 10.0 ** gen.integers(-5, 5, 2000)
    b = gen.uniform(-10, 10, 2000) * 10.0 ** gen.integers(-5, 5, 2000)
    kernels = {
        "add": (rd.vadd_down, rd.vadd_up),
        "sub": (rd.vsub_down, rd.vsub_up),
        "mul": (rd.vmul_down, rd.vmul_up),
        "div": (rd.vdiv_down, rd.vdiv_up),
    }
    for op, (vdown, vup) in kernels.items():
        down, up = vdown(a, b), vup(a, b)
        for x, y, d, u in zip(a, b, down, up):
            exact = _exact(op, float(x), float(y))
            assert Fraction(float(d)) <= exact <= Fraction(float(u))
            # scalar and vector kernels give the same correctly rounded result
            assert d == PAIRS[op][0](float(x), float(y))
            assert u == PAIRS[op][1](float(x), float(y))


def test_conformance_suite_small_run():
    report = rd.conformance_suite(n=2000, seed=5)
    assert report.ok, report.failures[:5]
    assert set(report.max_gap_ulps) == {"add", "sub", "mul", "div"}
    assert all(g <= 2.0 for g in report.max_gap_ulps.values())
