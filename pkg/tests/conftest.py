import math

import hypothesis.strategies as st
from hypothesis import HealthCheck, settings

from ivalkit.classical import Interval

settings.register_profile(
    "ivalkit",
    deadline=None,
    max_examples=200,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("ivalkit")

# moderate magnitudes keep products and quotients finite
finite = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False, allow_infinity=False)
any_finite = st.floats(allow_nan=False, allow_infinity=False)
unit = st.floats(min_value=-1.0, max_value=1.0, allow_nan=False)


@st.composite
def intervals(draw, lo=-1e6, hi=1e6):
    a = draw(st.floats(min_value=lo, max_value=hi, allow_nan=False))
    b = draw(st.floats(min_value=lo, max_value=hi, allow_nan=False))
    return Interval(min(a, b), max(a, b))


@st.composite
def nonzero_intervals(draw, lo=1e-3, hi=1e3):
    a = draw(st.floats(min_value=lo, max_value=hi))
    b = draw(st.floats(min_value=lo, max_value=hi))
    sign = draw(st.sampled_from((1.0, -1.0)))
    a, b = sign * a, sign * b
    return Interval(min(a, b), max(a, b))


def members(iv: Interval, fractions=(0.0, 0.25, 0.5, 0.75, 1.0)):
    """Points of ``iv`` at fixed relative positions (endpoints included)."""
    out = []
    for t in fractions:
        x = iv.lo + t * (iv.hi - iv.lo)
        out.append(min(max(x, iv.lo), iv.hi))
    return out


def isclose(a: float, b: float, tol: float) -> bool:
    return math.isclose(a, b, rel_tol=0.0, abs_tol=tol)
