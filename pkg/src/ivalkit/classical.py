"""Classical closed intervals with outward-rounded float64 endpoints."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterable, Sequence, Tuple, Union

from . import rounding as rd

__all__ = [
    "Interval",
    "Box",
    "EMPTY",
    "ENTIRE",
    "IntervalError",
    "ZeroInDenominator",
    "DegenerateZero",
    "add",
    "sub",
    "neg",
    "mul",
    "div",
    "scale",
    "sqr",
    "sqrt",
    "iabs",
    "wid",
    "rad",
    "mid",
    "mignitude",
    "magnitude",
    "dev",
    "chi",
    "hull",
    "intersect",
    "contains",
    "is_zero_containing",
    "format_interval",
    "parse_interval",
]

INF = math.inf
Number = Union[int, float]


class IntervalError(ValueError):
    """Base class for interval-layer errors."""


class ZeroInDenominator(IntervalError):
    """Raised when dividing by an interval that contains zero."""


class DegenerateZero(IntervalError):
    """Raised for the Ratschek functional of the point interval [0, 0]."""


@dataclass(frozen=True)
class Interval:
    """Closed interval ``[lo, hi]``; infinite endpoints are allowed."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        lo, hi = float(self.lo), float(self.hi)
        if math.isnan(lo) or math.isnan(hi):
            raise IntervalError("interval endpoints must not be NaN")
        if lo > hi:
            raise IntervalError(f"invalid interval [{lo!r}, {hi!r}]: lo > hi")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @classmethod
    def point(cls, value: Number) -> "Interval":
        return cls(value, value)

    @property
    def is_empty(self) -> bool:
        return False

    @property
    def is_entire(self) -> bool:
        return self.lo == -INF and self.hi == INF

    @property
    def is_finite(self) -> bool:
        return math.isfinite(self.lo) and math.isfinite(self.hi)

    def __iter__(self):
        yield self.lo
        yield self.hi

    def __contains__(self, item) -> bool:
        return contains(self, item)

    def __add__(self, other):
        return add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        return mul(self, _coerce(other))

    __rmul__ = __mul__

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __str__(self) -> str:
        return format_interval(self)


class _Empty:
    """The empty set, returned by :func:`intersect` for disjoint operands."""

    is_empty = True
    is_entire = False
    is_finite = True

    def __repr__(self) -> str:
        return "EMPTY"

    def __bool__(self) -> bool:
        return False

    def __contains__(self, item) -> bool:
        return False


EMPTY = _Empty()
ENTIRE = Interval(-INF, INF)


def _coerce(value) -> Interval:
    if isinstance(value, Interval):
        return value
    return Interval.point(float(value))


# ---------------------------------------------------------------------------
# arithmetic


def add(a: Interval, b: Interval) -> Interval:
    return Interval(rd.add_down(a.lo, b.lo), rd.add_up(a.hi, b.hi))


def sub(a: Interval, b: Interval) -> Interval:
    return Interval(rd.sub_down(a.lo, b.hi), rd.sub_up(a.hi, b.lo))


def neg(a: Interval) -> Interval:
    return Interval(-a.hi, -a.lo)


def _prod(x: float, y: float, down: bool) -> float:
    # 0 * inf is taken as 0: an endpoint at infinity only means "unbounded"
    if x == 0.0 or y == 0.0:
        return 0.0
    return rd.mul_down(x, y) if down else rd.mul_up(x, y)


def mul(a: Interval, b: Interval) -> Interval:
    """Product by endpoint enumeration with outward rounding."""
    pairs = ((a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi))
    lo = min(_prod(x, y, True) for x, y in pairs)
    hi = max(_prod(x, y, False) for x, y in pairs)
    return Interval(lo, hi)


def scale(a: Interval, alpha: float) -> Interval:
    return mul(a, Interval.point(alpha))


def div(a: Interval, b: Interval) -> Interval:
    """Quotient ``a / b``; ``b`` must not contain zero."""
    if b.lo <= 0.0 <= b.hi:
        raise ZeroInDenominator(f"denominator {format_interval(b)} contains zero")
    pairs = ((a.lo, b.lo), (a.lo, b.hi), (a.hi, b.lo), (a.hi, b.hi))
    lo = min(_quot(x, y, True) for x, y in pairs)
    hi = max(_quot(x, y, False) for x, y in pairs)
    return Interval(lo, hi)


def _quot(x: float, y: float, down: bool) -> float:
    if math.isinf(x) and math.isinf(y):
        # inf/inf: the unbounded end can reach any magnitude
        return -INF if down else INF
    return rd.div_down(x, y) if down else rd.div_up(x, y)


def sqr(a: Interval) -> Interval:
    """Dependent square ``{x*x : x in a}``, tighter than ``mul(a, a)``."""
    lo_mag = mignitude(a)
    hi_mag = magnitude(a)
    lo = 0.0 if lo_mag == 0.0 else rd.mul_down(lo_mag, lo_mag)
    return Interval(lo, rd.mul_up(hi_mag, hi_mag))


def sqrt(a: Interval) -> Interval:
    if a.hi < 0.0:
        raise IntervalError(f"sqrt of negative interval {format_interval(a)}")
    lo = rd.sqrt_down(max(a.lo, 0.0))
    return Interval(max(lo, 0.0), rd.sqrt_up(a.hi))


def iabs(a: Interval) -> Interval:
    return Interval(mignitude(a), magnitude(a))


# ---------------------------------------------------------------------------
# characteristics


def wid(a: Interval) -> float:
    return rd.sub_up(a.hi, a.lo)


def rad(a: Interval) -> float:
    if not a.is_finite:
        raise IntervalError("rad of an unbounded interval")
    return rd.mul_up(rd.sub_up(a.hi, a.lo), 0.5)


def mid(a: Interval) -> float:
    if not a.is_finite:
        raise IntervalError("mid of an unbounded interval")
    m = 0.5 * a.lo + 0.5 * a.hi
    return min(max(m, a.lo), a.hi)


def mignitude(a: Interval) -> float:
    """Smallest absolute value in ``a`` (0 when ``a`` straddles zero)."""
    if a.lo <= 0.0 <= a.hi:
        return 0.0
    return min(abs(a.lo), abs(a.hi))


def magnitude(a: Interval) -> float:
    return max(abs(a.lo), abs(a.hi))


def dev(a: Interval) -> float:
    """Endpoint of largest absolute value, the lower one on ties."""
    return a.lo if abs(a.lo) >= abs(a.hi) else a.hi


def chi(a: Interval) -> float:
    """Ratschek functional: ratio of the smaller to the larger endpoint."""
    if a.lo == 0.0 and a.hi == 0.0:
        raise DegenerateZero("chi is undefined for [0, 0]")
    if abs(a.hi) >= abs(a.lo):
        return a.lo / a.hi
    return a.hi / a.lo


# ---------------------------------------------------------------------------
# set operations


def hull(*items: Interval) -> Interval:
    present = [x for x in items if not getattr(x, "is_empty", False)]
    if not present:
        raise IntervalError("hull of nothing")
    return Interval(min(x.lo for x in present), max(x.hi for x in present))


def intersect(a: Interval, b: Interval):
    """Intersection, or :data:`EMPTY` when the operands are disjoint."""
    lo, hi = max(a.lo, b.lo), min(a.hi, b.hi)
    if lo > hi:
        return EMPTY
    return Interval(lo, hi)


def contains(a: Interval, item) -> bool:
    if getattr(item, "is_empty", False):
        return True
    if isinstance(item, Interval):
        return a.lo <= item.lo and item.hi <= a.hi
    return a.lo <= item <= a.hi


def is_zero_containing(a: Interval) -> bool:
    return a.lo <= 0.0 <= a.hi


# ---------------------------------------------------------------------------
# boxes and text form


class Box(tuple):
    """Nonempty ordered tuple of intervals (an interval vector)."""

    def __new__(cls, components: Iterable[Interval]):
        items = tuple(components)
        if not items:
            raise IntervalError("a box needs at least one component")
        for item in items:
            if not isinstance(item, Interval):
                raise IntervalError(f"box component {item!r} is not an Interval")
        return super().__new__(cls, items)

    def contains(self, other: Sequence) -> bool:
        return len(other) == len(self) and all(contains(a, b) for a, b in zip(self, other))

    def widths(self) -> Tuple[float, ...]:
        return tuple(wid(a) for a in self)


def _fmt(x: float) -> str:
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return repr(x)


def format_interval(a: Interval) -> str:
    """``[lo,hi]`` using the shortest round-trip decimal for each endpoint."""
    if getattr(a, "is_empty", False):
        return "[]"
    return f"[{_fmt(a.lo)},{_fmt(a.hi)}]"


_TEXT = re.compile(r"^\s*\[\s*([^,\]]+?)\s*,\s*([^,\]]+?)\s*\]\s*$")


def parse_interval(text: str) -> Interval:
    m = _TEXT.match(text)
    if not m:
        raise IntervalError(f"cannot parse interval from {text!r}")
    return Interval(float(m.group(1)), float(m.group(2)))
