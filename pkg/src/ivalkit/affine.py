"""Affine arithmetic over named noise symbols.

A form ``x0 + sum(xi * e_i) + extra * e_*`` keeps first-order correlations
between quantities that share noise symbols.  The ``extra`` coefficient
belongs to a symbol that is never shared: each nonlinear operation produces a
fresh one, and coefficients of such symbols accumulate by absolute value.

Coefficients are computed in round-to-nearest; every rounding error is
bounded rigorously and folded into ``extra`` so the enclosed set survives
floating point.  Exact dyadic inputs therefore produce exact outputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Mapping, Optional, Tuple

from . import classical as cl
from . import rounding as rd
from ._registry import ParamId, ParamRegistry
from .classical import Interval

__all__ = [
    "AffineForm",
    "from_interval",
    "constant",
    "linear",
    "add",
    "sub",
    "neg",
    "scale",
    "mul",
    "REMAINDER_POLICIES",
    "div_by_interval",
    "to_interval",
    "effective_and_extra_area",
]

NoiseSymbolId = ParamId


@dataclass(frozen=True)
class AffineForm:
    """``center + sum(terms[s] * e_s) + extra * e_*`` with every ``e`` in [-1, 1]."""

    center: float
    terms: Mapping[NoiseSymbolId, float] = field(default_factory=dict)
    extra: float = 0.0

    def __post_init__(self) -> None:
        if self.extra < 0 or math.isnan(self.extra):
            raise ValueError("extra coefficient must be a nonnegative number")
        cleaned = {k: float(v) for k, v in self.terms.items() if v != 0.0}
        object.__setattr__(self, "terms", cleaned)
        object.__setattr__(self, "center", float(self.center))
        object.__setattr__(self, "extra", float(self.extra))

    def radius(self) -> float:
        """Sum of all coefficient magnitudes, rounded up."""
        total = self.extra
        for value in self.terms.values():
            total = rd.add_up(total, abs(value))
        return total

    def __add__(self, other):
        return add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        if isinstance(other, AffineForm):
            return mul(self, other)
        return scale(self, float(other))

    __rmul__ = __mul__

    def __neg__(self):
        return neg(self)

    def __str__(self) -> str:
        parts = [repr(self.center)]
        for sym in sorted(self.terms):
            parts.append(f"{self.terms[sym]!r}·e{sym}")
        if self.extra:
            parts.append(f"{self.extra!r}·e*")
        return " + ".join(parts)


def _coerce(value) -> AffineForm:
    if isinstance(value, AffineForm):
        return value
    return constant(float(value))


def constant(value: float) -> AffineForm:
    return AffineForm(value)


def from_interval(a: Interval, sym: NoiseSymbolId) -> AffineForm:
    """``mid(a) + rad(a) * e_sym``, with the radius rounded to cover ``a``."""
    if not a.is_finite:
        raise cl.IntervalError("affine forms need bounded intervals")
    m = cl.mid(a)
    r = max(rd.sub_up(a.hi, m), rd.sub_up(m, a.lo))
    return AffineForm(m, {sym: r} if r else {})


def linear(alpha: float, x: AffineForm, beta: float, y: AffineForm, gamma: float = 0.0) -> AffineForm:
    """``alpha * x + beta * y + gamma`` with rounding errors moved to ``extra``."""
    center, err = rd.dot_nearest(((alpha, x.center), (beta, y.center), (gamma, 1.0)))
    extra = err
    terms: Dict[NoiseSymbolId, float] = {}
    for sym in x.terms.keys() | y.terms.keys():
        value, err = rd.dot_nearest(((alpha, x.terms.get(sym, 0.0)), (beta, y.terms.get(sym, 0.0))))
        extra = rd.add_up(extra, err)
        if value != 0.0:
            terms[sym] = value
    extra = rd.add_up(extra, rd.mul_up(abs(alpha), x.extra))
    extra = rd.add_up(extra, rd.mul_up(abs(beta), y.extra))
    return AffineForm(center, terms, extra)


_ZERO = AffineForm(0.0)


def add(x: AffineForm, y: AffineForm) -> AffineForm:
    return linear(1.0, x, 1.0, y)


def sub(x: AffineForm, y: AffineForm) -> AffineForm:
    return linear(1.0, x, -1.0, y)


def neg(x: AffineForm) -> AffineForm:
    return AffineForm(-x.center, {k: -v for k, v in x.terms.items()}, x.extra)


def scale(x: AffineForm, alpha: float, shift: float = 0.0) -> AffineForm:
    return linear(alpha, x, 0.0, _ZERO, shift)


REMAINDER_POLICIES = ("generic", "square", "diagonal")


def _symmetric(iv: Interval) -> Interval:
    m = cl.magnitude(iv)
    return Interval(-m, m)


def _remainder(x: AffineForm, y: AffineForm, policy: str) -> Interval:
    """Classical enclosure of the product of the two noise parts."""
    if policy == "square" and not x.extra and not y.extra and len(x.terms) == 1 and x.terms.keys() == y.terms.keys():
        (sym,) = x.terms
        # e * e ranges over [0, 1], not [-1, 1]
        return cl.mul(Interval(0.0, 1.0), Interval.point(x.terms[sym]) * Interval.point(y.terms[sym]))
    if policy != "diagonal":
        rx, ry = x.radius(), y.radius()
        return cl.mul(Interval(-rx, rx), Interval(-ry, ry))
    # e_s * e_s lies in [0, 1]; e_s * e_t (s != t) in [-1, 1] with both orders merged
    unit = Interval(0.0, 1.0)
    syms = sorted(x.terms.keys() | y.terms.keys())
    total = Interval(0.0, 0.0)
    for k, s in enumerate(syms):
        xs, ys = Interval.point(x.terms.get(s, 0.0)), Interval.point(y.terms.get(s, 0.0))
        total = total + cl.mul(unit, xs * ys)
        for t in syms[k + 1:]:
            xt, yt = Interval.point(x.terms.get(t, 0.0)), Interval.point(y.terms.get(t, 0.0))
            total = total + _symmetric(xs * yt + xt * ys)
    rx, ry = x.radius(), y.radius()
    wx, wy = rd.sub_up(rx, x.extra), rd.sub_up(ry, y.extra)
    spill = rd.add_up(rd.add_up(rd.mul_up(x.extra, wy), rd.mul_up(y.extra, wx)), rd.mul_up(x.extra, y.extra))
    return total + Interval(-spill, spill)


def mul(x: AffineForm, y: AffineForm, remainder: str = "square") -> AffineForm:
    """Product of affine forms.

    The quadratic part is enclosed by a classical interval and re-centred:
    its midpoint joins the center and its radius becomes a fresh extra term.
    ``remainder`` picks the enclosure of that part:

    ``"generic"``
        product of the two noise radii, symmetric about zero;
    ``"square"`` (default)
        as ``generic``, except that two forms over one common symbol and no
        extras use ``e * e`` in [0, 1];
    ``"diagonal"``
        every shared symbol contributes ``x_s * y_s * e_s^2`` with
        ``e_s^2`` in [0, 1], and the two orders of each mixed pair are
        merged before bounding, so opposite contributions cancel.
    """
    if remainder not in REMAINDER_POLICIES:
        raise ValueError(f"unknown remainder policy {remainder!r}")
    q = _remainder(x, y, remainder)
    q_mid = cl.mid(q)
    q_rad = max(rd.sub_up(q.hi, q_mid), rd.sub_up(q_mid, q.lo))
    center, extra = rd.dot_nearest(((x.center, y.center), (q_mid, 1.0)))
    terms: Dict[NoiseSymbolId, float] = {}
    for sym in x.terms.keys() | y.terms.keys():
        value, err = rd.dot_nearest(((x.center, y.terms.get(sym, 0.0)), (x.terms.get(sym, 0.0), y.center)))
        extra = rd.add_up(extra, err)
        if value != 0.0:
            terms[sym] = value
    extra = rd.add_up(extra, rd.mul_up(abs(x.center), y.extra))
    extra = rd.add_up(extra, rd.mul_up(abs(y.center), x.extra))
    extra = rd.add_up(extra, q_rad)
    return AffineForm(center, terms, extra)


def div_by_interval(x: AffineForm, d: Interval, remainder: str = "square") -> AffineForm:
    """``x / d`` for a classical divisor that excludes zero.

    The reciprocal of ``d`` enters as a form with no shared symbols, so the
    correlation carried by ``x`` survives only through the linear terms.
    """
    recip = cl.div(Interval.point(1.0), d)
    r_mid = cl.mid(recip)
    r_rad = max(rd.sub_up(recip.hi, r_mid), rd.sub_up(r_mid, recip.lo))
    return mul(x, AffineForm(r_mid, {}, r_rad), remainder)


def to_interval(x: AffineForm) -> Interval:
    r = x.radius()
    return Interval(rd.sub_down(x.center, r), rd.add_up(x.center, r))


def effective_and_extra_area(x: AffineForm) -> Tuple[float, float]:
    """Areas swept by the associated terms and by the extra term.

    Over ``e in [-1, 1]`` a coefficient ``c`` sweeps a band of area ``2|c|``.
    """
    associated = 0.0
    for value in x.terms.values():
        associated = rd.add_up(associated, abs(value))
    return rd.mul_up(2.0, associated), rd.mul_up(2.0, x.extra)
