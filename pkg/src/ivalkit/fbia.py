"""Functional-boundary interval arithmetic.

An :class:`FBInterval` is a pair of boundary functionals ``(L, U)`` over
parameters ``x_i`` in [-1, 1].  Each functional lives in the central
broken-line basis ``{1, x_i, |x_i|}``::

    BF(x) = c + sum(a_i * x_i) + sum(b_i * |x_i|)

so for every parameter point the pair describes an ordinary interval
``[L(x), U(x)]``.  Because the functionals are separable and piecewise linear
with a single kink per coordinate, dominance and range questions reduce to
the grid ``{-1, 0, 1}^n``; this is what makes :func:`f_up`, :func:`f_down` and
:func:`to_interval` cheap and exact.

Floating point
--------------
Coefficients are kept as round-to-nearest floats.  Each operation encloses
every new coefficient with directed rounding, keeps the midpoint, and pushes
the accumulated radius into the constant term (down for ``L``, up for ``U``).
Since ``|x_i| <= 1`` that covers the coefficient error at every point.
Dyadic inputs with short mantissas therefore stay exact.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

from . import classical as cl
from . import rounding as rd
from ._registry import ParamId, ParamRegistry
from .affine import AffineForm
from .classical import Interval, ZeroInDenominator

__all__ = [
    "BoundaryFunctional",
    "FBInterval",
    "HalfEnvelope",
    "ChebFit",
    "Mobius",
    "NotMonotoneDerivative",
    "ParamRegistry",
    "embed_classical",
    "embed_param",
    "embed_affine",
    "constant",
    "add",
    "sub",
    "neg",
    "scale",
    "mul",
    "div",
    "cheb_fit",
    "mobius_band",
    "glue",
    "envelope_cross_terms",
    "XABS_SLOPE",
    "XABS_OFFSET",
    "f_up",
    "f_down",
    "to_interval",
    "to_csv_rows",
    "from_csv_rows",
]

Point = Mapping[ParamId, float]


class NotMonotoneDerivative(ValueError):
    """The tangency point of a Chebyshev fit fell outside the fit interval."""


# ---------------------------------------------------------------------------
# basis functionals


@dataclass(frozen=True)
class BoundaryFunctional:
    """``c + sum(a[i] * x_i) + sum(b[i] * |x_i|)`` over canonical parameters."""

    c: float = 0.0
    a: Mapping[ParamId, float] = field(default_factory=dict)
    b: Mapping[ParamId, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "a", {k: float(v) for k, v in self.a.items() if v != 0.0})
        object.__setattr__(self, "b", {k: float(v) for k, v in self.b.items() if v != 0.0})
        values = [self.c, *self.a.values(), *self.b.values()]
        if not all(math.isfinite(v) for v in values):
            raise ValueError("boundary functional coefficients must be finite")

    @property
    def params(self) -> frozenset:
        return frozenset(self.a) | frozenset(self.b)

    def coef(self, pid: ParamId) -> Tuple[float, float]:
        return self.a.get(pid, 0.0), self.b.get(pid, 0.0)

    def __call__(self, point: Point) -> float:
        total = self.c
        for pid in self.params:
            x = point.get(pid, 0.0)
            ai, bi = self.coef(pid)
            total += ai * x + bi * abs(x)
        return total

    def exact(self, point: Point) -> Fraction:
        """Exact rational value at a point (for oracles and tests)."""
        total = Fraction(self.c)
        for pid in self.params:
            x = Fraction(point.get(pid, 0.0))
            ai, bi = self.coef(pid)
            total += Fraction(ai) * x + Fraction(bi) * abs(x)
        return total

    def range_lo(self) -> float:
        """Rigorous lower bound of the minimum over [-1, 1]^n."""
        total = self.c
        for pid in self.params:
            ai, bi = self.coef(pid)
            total = rd.add_down(total, min(0.0, rd.add_down(-ai, bi), rd.add_down(ai, bi)))
        return total

    def range_hi(self) -> float:
        total = self.c
        for pid in self.params:
            ai, bi = self.coef(pid)
            total = rd.add_up(total, max(0.0, rd.add_up(-ai, bi), rd.add_up(ai, bi)))
        return total

    def negated(self) -> "BoundaryFunctional":
        return BoundaryFunctional(-self.c, {k: -v for k, v in self.a.items()}, {k: -v for k, v in self.b.items()})

    def __str__(self) -> str:
        parts = [repr(self.c)]
        for pid in sorted(self.params):
            ai, bi = self.coef(pid)
            if ai:
                parts.append(f"{ai!r}*x{pid}")
            if bi:
                parts.append(f"{bi!r}*|x{pid}|")
        return " + ".join(parts)


@dataclass(frozen=True)
class FBInterval:
    """Band between a lower functional ``L`` and an upper functional ``U``."""

    L: BoundaryFunctional
    U: BoundaryFunctional

    @property
    def params(self) -> frozenset:
        return self.L.params | self.U.params

    def at(self, point: Point) -> Tuple[float, float]:
        return self.L(point), self.U(point)

    def exact_at(self, point: Point) -> Tuple[Fraction, Fraction]:
        return self.L.exact(point), self.U.exact(point)

    def __add__(self, other):
        return add(self, _coerce(other))

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, _coerce(other))

    def __rsub__(self, other):
        return sub(_coerce(other), self)

    def __mul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(self, _coerce(other))

    def __rmul__(self, other):
        if isinstance(other, (int, float)):
            return scale(self, float(other))
        return mul(_coerce(other), self)

    def __truediv__(self, other):
        return div(self, _coerce(other))

    def __rtruediv__(self, other):
        return div(_coerce(other), self)

    def __neg__(self):
        return neg(self)

    def __str__(self) -> str:
        return f"[{self.L}, {self.U}]"


def _coerce(value) -> FBInterval:
    if isinstance(value, FBInterval):
        return value
    if isinstance(value, Interval):
        return embed_classical(value)
    return constant(float(value))


# ---------------------------------------------------------------------------
# coefficient accumulation with rigorous error tracking


class _Acc:
    """Collects products per coefficient and emits a rounded functional.

    ``slack`` is extra outward width known from elsewhere (for instance the
    rounding error of a coefficient multiplying a term bounded by 1).
    """

    def __init__(self) -> None:
        self.c: List[Tuple[float, float]] = []
        self.a: Dict[ParamId, List[Tuple[float, float]]] = defaultdict(list)
        self.b: Dict[ParamId, List[Tuple[float, float]]] = defaultdict(list)
        self.slack = 0.0

    def add_functional(self, f: BoundaryFunctional, factor: float = 1.0) -> None:
        self.c.append((f.c, factor))
        for pid, v in f.a.items():
            self.a[pid].append((v, factor))
        for pid, v in f.b.items():
            self.b[pid].append((v, factor))

    def add_slack(self, amount: float) -> None:
        self.slack = rd.add_up(self.slack, amount)

    def finish(self, lower: bool) -> BoundaryFunctional:
        err = self.slack
        c, e = rd.dot_nearest(self.c)
        err = rd.add_up(err, e)
        a: Dict[ParamId, float] = {}
        b: Dict[ParamId, float] = {}
        for pid, pairs in self.a.items():
            a[pid], e = rd.dot_nearest(pairs)
            err = rd.add_up(err, e)
        for pid, pairs in self.b.items():
            b[pid], e = rd.dot_nearest(pairs)
            err = rd.add_up(err, e)
        c = rd.sub_down(c, err) if lower else rd.add_up(c, err)
        return BoundaryFunctional(c, a, b)


def _combine(lower_parts: Iterable[Tuple[BoundaryFunctional, float]], upper_parts: Iterable[Tuple[BoundaryFunctional, float]]) -> FBInterval:
    lo, hi = _Acc(), _Acc()
    for f, k in lower_parts:
        lo.add_functional(f, k)
    for f, k in upper_parts:
        hi.add_functional(f, k)
    return FBInterval(lo.finish(True), hi.finish(False))


# ---------------------------------------------------------------------------
# embeddings


def constant(value: float) -> FBInterval:
    f = BoundaryFunctional(value)
    return FBInterval(f, f)


def embed_classical(a: Interval) -> FBInterval:
    """Constant functionals ``L = lo``, ``U = hi``."""
    if not a.is_finite:
        raise cl.IntervalError("functional-boundary intervals need finite bounds")
    return FBInterval(BoundaryFunctional(a.lo), BoundaryFunctional(a.hi))


def embed_param(pid: ParamId, registry: Optional[ParamRegistry] = None) -> FBInterval:
    """The parameter itself; with a registry, rescaled to its user interval."""
    if registry is None or registry[pid].original is None:
        f = BoundaryFunctional(0.0, {pid: 1.0})
        return FBInterval(f, f)
    info = registry[pid]
    f = BoundaryFunctional(info.mid, {pid: info.rad})
    return FBInterval(f, f)


def embed_affine(x: AffineForm, mapping: Optional[Mapping[ParamId, ParamId]] = None) -> FBInterval:
    """Affine form as a band; noise symbols outside ``mapping`` widen the band.

    With ``mapping=None`` every symbol maps to the parameter of the same id.
    """
    a: Dict[ParamId, float] = {}
    width = x.extra
    for sym, coef in x.terms.items():
        if mapping is None:
            a[sym] = coef
        elif sym in mapping:
            a[mapping[sym]] = a.get(mapping[sym], 0.0) + coef
        else:
            width = rd.add_up(width, abs(coef))
    lo = BoundaryFunctional(rd.sub_down(x.center, width), a)
    hi = BoundaryFunctional(rd.add_up(x.center, width), a)
    return FBInterval(lo, hi)


# ---------------------------------------------------------------------------
# linear operations


def add(p: FBInterval, q: FBInterval) -> FBInterval:
    return _combine(((p.L, 1.0), (q.L, 1.0)), ((p.U, 1.0), (q.U, 1.0)))


def sub(p: FBInterval, q: FBInterval) -> FBInterval:
    return _combine(((p.L, 1.0), (q.U, -1.0)), ((p.U, 1.0), (q.L, -1.0)))


def neg(p: FBInterval) -> FBInterval:
    return FBInterval(p.U.negated(), p.L.negated())


def scale(p: FBInterval, alpha: float) -> FBInterval:
    if alpha >= 0:
        return _combine(((p.L, alpha),), ((p.U, alpha),))
    return _combine(((p.U, alpha),), ((p.L, alpha),))


# ---------------------------------------------------------------------------
# range and grids


def to_interval(p: FBInterval) -> Interval:
    """Range of the band over [-1, 1]^n, attained on {-1, 0, 1}^n."""
    return Interval(p.L.range_lo(), p.U.range_hi())


# ---------------------------------------------------------------------------
# F-down / F-up


def _diff_range_lo(h: BoundaryFunctional, g: BoundaryFunctional) -> float:
    """Rigorous lower bound of ``min (h - g)`` over the parameter box."""
    total = rd.sub_down(h.c, g.c)
    for pid in h.params | g.params:
        ha, hb = h.coef(pid)
        ga, gb = g.coef(pid)
        da_lo, da_hi = rd.sub_down(ha, ga), rd.sub_up(ha, ga)
        db_lo = rd.sub_down(hb, gb)
        at_minus = rd.add_down(-da_hi, db_lo)
        at_plus = rd.add_down(da_lo, db_lo)
        total = rd.add_down(total, min(0.0, at_minus, at_plus))
    return total


def _prune(cands: Sequence[BoundaryFunctional], upper: bool) -> List[BoundaryFunctional]:
    """Drop candidates that another candidate bounds everywhere."""
    kept: List[BoundaryFunctional] = []
    for g in cands:
        if any((_diff_range_lo(h, g) >= 0.0) if upper else (_diff_range_lo(g, h) >= 0.0) for h in kept):
            continue
        if upper:
            kept = [h for h in kept if _diff_range_lo(g, h) < 0.0]
        else:
            kept = [h for h in kept if _diff_range_lo(h, g) < 0.0]
        kept.append(g)
    return kept


def _envelope_of(cands: Sequence[BoundaryFunctional], upper: bool) -> BoundaryFunctional:
    cands = _prune(list(cands), upper)
    if len(cands) == 1:
        return cands[0]
    pick = max if upper else min
    c = pick(g.c for g in cands)
    slack = 0.0
    a: Dict[ParamId, float] = {}
    b: Dict[ParamId, float] = {}
    params = frozenset().union(*(g.params for g in cands))
    for pid in params:
        if upper:
            at_plus = max(rd.add_up(*g.coef(pid)) for g in cands)
            at_minus = max(rd.add_up(-g.coef(pid)[0], g.coef(pid)[1]) for g in cands)
        else:
            at_plus = min(rd.add_down(*g.coef(pid)) for g in cands)
            at_minus = min(rd.add_down(-g.coef(pid)[0], g.coef(pid)[1]) for g in cands)
        ai = 0.5 * (at_plus - at_minus)
        bi = 0.5 * (at_plus + at_minus)
        if upper:
            short = max(0.0, rd.sub_up(at_plus, rd.add_down(ai, bi)), rd.sub_up(at_minus, rd.add_down(-ai, bi)))
        else:
            short = max(0.0, rd.sub_up(rd.add_up(ai, bi), at_plus), rd.sub_up(rd.add_up(-ai, bi), at_minus))
        slack = rd.add_up(slack, short)
        a[pid], b[pid] = ai, bi
    c = rd.add_up(c, slack) if upper else rd.sub_down(c, slack)
    return BoundaryFunctional(c, a, b)


def f_up(cands: Sequence[BoundaryFunctional]) -> BoundaryFunctional:
    """A basis functional that is >= every candidate on [-1, 1]^n.

    Per coordinate the candidates are compared at -1 and +1 (all of them
    vanish at 0), the pointwise maxima are interpolated by ``a x + b |x|``,
    and the constant is the largest candidate constant.
    """
    if not cands:
        raise ValueError("f_up needs at least one candidate")
    return _envelope_of(cands, upper=True)


def f_down(cands: Sequence[BoundaryFunctional]) -> BoundaryFunctional:
    """A basis functional that is <= every candidate on [-1, 1]^n."""
    if not cands:
        raise ValueError("f_down needs at least one candidate")
    return _envelope_of(cands, upper=False)


# ---------------------------------------------------------------------------
# half-interval envelopes, Chebyshev fits and glue


@dataclass(frozen=True)
class HalfEnvelope:
    """Lines ``k_lo x + b_lo <= f(x) <= k_hi x + b_hi`` on one half-interval."""

    k_lo: float
    b_lo: float
    k_hi: float
    b_hi: float


@dataclass(frozen=True)
class ChebFit:
    """Best uniform line ``g1 x + g0`` for a convex or concave function.

    ``q`` is the signed deviation at the endpoints (``-q`` at the tangency
    point ``x1``), so ``g1 x + g0 +- |q|`` encloses the function.
    """

    g0: float
    g1: float
    q: float
    x1: float

    def band(self) -> HalfEnvelope:
        r = abs(self.q)
        return HalfEnvelope(self.g1, self.g0 - r, self.g1, self.g0 + r)


def cheb_fit(
    f: Callable[[float], float],
    x0: float,
    x2: float,
    convexity: str,
    slope_inverse: Optional[Callable[[float], float]] = None,
) -> ChebFit:
    """Chebyshev alternance fit of a convex/concave ``f`` on ``[x0, x2]``.

    The slope equals the secant slope; the tangency point ``x1`` solves
    ``f'(x1) = g1`` via ``slope_inverse``; the intercept balances the errors
    at ``x0`` and ``x1``.  Without ``slope_inverse`` (or when ``f`` is linear)
    the function is treated as affine and ``q`` is 0.
    """
    if convexity not in ("convex", "concave", "linear"):
        raise ValueError(f"unknown convexity {convexity!r}")
    f0, f2 = f(x0), f(x2)
    g1 = (f2 - f0) / (x2 - x0)
    if convexity == "linear" or slope_inverse is None:
        return ChebFit(f0 - g1 * x0, g1, 0.0, 0.5 * (x0 + x2))
    x1 = slope_inverse(g1)
    span = x2 - x0
    if not (x0 - 1e-9 * span <= x1 <= x2 + 1e-9 * span):
        raise NotMonotoneDerivative(f"tangency point {x1!r} outside [{x0!r}, {x2!r}]")
    x1 = min(max(x1, x0), x2)
    g0 = 0.5 * (f0 + f(x1) - g1 * (x0 + x1))
    q = f0 - g1 * x0 - g0
    return ChebFit(g0, g1, q, x1)


@dataclass(frozen=True)
class Mobius:
    """``(p x + r) / (s x + t)`` with interval-enclosed coefficients.

    The approximate fit uses the coefficient midpoints; the deviation bounds
    in :func:`mobius_band` use the full intervals and so cover the exact
    function whatever its true coefficients within the enclosures.
    """

    p: Interval
    r: Interval
    s: Interval
    t: Interval

    def mids(self) -> Tuple[float, float, float, float]:
        return cl.mid(self.p), cl.mid(self.r), cl.mid(self.s), cl.mid(self.t)

    def value(self, x: float) -> float:
        p, r, s, t = self.mids()
        return (p * x + r) / (s * x + t)

    def enclose(self, x: float) -> Interval:
        xi = Interval.point(x)
        return cl.div(self.p * xi + self.r, self.s * xi + self.t)

    def det(self) -> Interval:
        return self.p * self.t - self.r * self.s

    def derivative_enclosure(self, x: float) -> Interval:
        d = self.s * Interval.point(x) + self.t
        return cl.div(self.det(), cl.sqr(d))

    def slope_inverse(self, g1: float) -> float:
        """Point where the derivative ``(pt - rs)/(sx + t)^2`` equals ``g1``."""
        p, r, s, t = self.mids()
        det = p * t - r * s
        if s == 0.0 or g1 == 0.0 or det / g1 <= 0.0:
            return math.nan
        return (math.sqrt(det / g1) - t) / s


def _denominator_positive(m: Mobius, x0: float, x2: float) -> bool:
    d0 = m.s * Interval.point(x0) + m.t
    d2 = m.s * Interval.point(x2) + m.t
    return d0.lo > 0.0 and d2.lo > 0.0


def mobius_band(m: Mobius, x0: float, x2: float) -> HalfEnvelope:
    """Rigorous linear band around a Möbius function on ``[x0, x2]``.

    The denominator must stay positive on the interval.  A Chebyshev fit
    provides the line; deviations are then bounded with interval arithmetic:
    at the endpoints directly, and at the interior extremum through the
    tangent inequality of the convex (or concave) error function.
    """
    if not _denominator_positive(m, x0, x2):
        raise ZeroInDenominator("Möbius denominator not positive on the half-interval")
    curvature = m.s * m.det()  # f'' has the sign of -s * det
    if curvature.lo == 0.0 and curvature.hi == 0.0:
        kind = "linear"
    elif curvature.lo > 0.0:
        kind = "concave"
    elif curvature.hi < 0.0:
        kind = "convex"
    else:
        kind = "unknown"

    fit: Optional[ChebFit] = None
    if kind in ("convex", "concave"):
        try:
            fit = cheb_fit(m.value, x0, x2, kind, m.slope_inverse)
        except NotMonotoneDerivative:
            fit = None
        if fit is not None and math.isnan(fit.x1):
            fit = None
    if fit is None:
        fit = cheb_fit(m.value, x0, x2, "linear")
    g0, g1 = fit.g0, fit.g1
    line = lambda x: Interval.point(g1) * Interval.point(x) + Interval.point(g0)  # noqa: E731

    h0 = m.enclose(x0) - line(x0)
    h2 = m.enclose(x2) - line(x2)
    lo = min(h0.lo, h2.lo)
    hi = max(h0.hi, h2.hi)
    if kind in ("convex", "concave") and fit.q != 0.0:
        x1 = fit.x1
        h1 = m.enclose(x1) - line(x1)
        slope = m.derivative_enclosure(x1) - Interval.point(g1)
        reach = rd.mul_up(cl.magnitude(slope), max(rd.sub_up(x1, x0), rd.sub_up(x2, x1)))
        if kind == "convex":
            lo = min(lo, rd.sub_down(h1.lo, reach))
        else:
            hi = max(hi, rd.add_up(h1.hi, reach))
    elif kind == "unknown":
        # |h''| <= M on the interval bounds the gap to the chord by M w^2 / 8
        dmin = min((m.s * Interval.point(x) + m.t).lo for x in (x0, x2))
        cube = rd.mul_down(rd.mul_down(dmin, dmin), dmin)
        bound = rd.div_up(rd.mul_up(2.0, rd.mul_up(cl.magnitude(m.s), cl.magnitude(m.det()))), cube)
        w = rd.sub_up(x2, x0)
        gap = rd.mul_up(bound, rd.mul_up(rd.mul_up(w, w), 0.125))
        lo, hi = rd.sub_down(lo, gap), rd.add_up(hi, gap)
    return HalfEnvelope(g1, rd.add_down(g0, lo), g1, rd.add_up(g0, hi))


def _glue_side(k_left: float, b_left: float, k_right: float, b_right: float, pid: ParamId, upper: bool) -> BoundaryFunctional:
    pick = max if upper else min
    c = pick(b_left, b_right)
    a = 0.5 * (k_right + k_left + b_right - b_left)
    b = 0.5 * (k_right - k_left + b_right + b_left - 2.0 * c)
    # targets: left line at -1, right line at +1 (the value at 0 is c itself)
    if upper:
        t_minus = rd.sub_up(b_left, k_left)
        t_plus = rd.add_up(k_right, b_right)
        got_minus = rd.add_down(rd.add_down(-a, b), c)
        got_plus = rd.add_down(rd.add_down(a, b), c)
        short = max(0.0, rd.sub_up(t_minus, got_minus), rd.sub_up(t_plus, got_plus))
        c = rd.add_up(c, short)
    else:
        t_minus = rd.sub_down(b_left, k_left)
        t_plus = rd.add_down(k_right, b_right)
        got_minus = rd.add_up(rd.add_up(-a, b), c)
        got_plus = rd.add_up(rd.add_up(a, b), c)
        short = max(0.0, rd.sub_up(got_minus, t_minus), rd.sub_up(got_plus, t_plus))
        c = rd.sub_down(c, short)
    return BoundaryFunctional(c, {pid: a}, {pid: b})


def glue(left: HalfEnvelope, right: HalfEnvelope, pid: ParamId = 0) -> FBInterval:
    """Merge bands on [-1, 0] and [0, 1] into one broken-line band.

    The upper functional takes the larger intercept as its value at 0 and
    matches each half's upper line at its outer end; the lower functional
    mirrors this with the smaller intercept.
    """
    upper = _glue_side(left.k_hi, left.b_hi, right.k_hi, right.b_hi, pid, True)
    lower = _glue_side(left.k_lo, left.b_lo, right.k_lo, right.b_lo, pid, False)
    return FBInterval(lower, upper)


# ---------------------------------------------------------------------------
# precomputed envelopes of the nonlinear product terms

# minimax line of x|x| on [-1, 1]: slope 2(sqrt 2 - 1), offset 3 - 2 sqrt 2
XABS_SLOPE = 2.0 * (math.sqrt(2.0) - 1.0)
XABS_OFFSET = max(rd.sub_up(1.0, XABS_SLOPE), rd.mul_up(rd.mul_up(XABS_SLOPE, XABS_SLOPE), 0.25))


def envelope_cross_terms(i: ParamId, j: Optional[ParamId], kind: str) -> FBInterval:
    """Basis band enclosing one nonlinear monomial.

    ``kind`` is one of ``"sqr"`` (x_i^2), ``"xAbsSelf"`` (x_i |x_i|),
    ``"xx"`` (x_i x_j), ``"absAbs"`` (|x_i| |x_j|) and ``"xAbs"``
    (x_i |x_j|).
    """
    BF = BoundaryFunctional
    if kind == "sqr":
        return FBInterval(BF(-0.25, {}, {i: 1.0}), BF(0.0, {}, {i: 1.0}))
    if kind == "xAbsSelf":
        return FBInterval(BF(-XABS_OFFSET, {i: XABS_SLOPE}), BF(XABS_OFFSET, {i: XABS_SLOPE}))
    if j is None or j == i:
        raise ValueError(f"envelope kind {kind!r} needs two distinct parameters")
    if kind == "xx":
        return FBInterval(BF(0.0, {}, {i: -0.5, j: -0.5}), BF(0.0, {}, {i: 0.5, j: 0.5}))
    if kind == "absAbs":
        return FBInterval(BF(0.0), BF(0.0, {}, {i: 0.5, j: 0.5}))
    if kind == "xAbs":
        # the |x_j| factor is in [0, 1], x_i carries the sign
        return FBInterval(
            BF(0.0, {i: 0.25}, {i: -0.25, j: -0.5}),
            BF(0.0, {i: 0.25}, {i: 0.25, j: 0.5}),
        )
    raise ValueError(f"unknown envelope kind {kind!r}")


# ---------------------------------------------------------------------------
# multiplication


def _add_term(lo: _Acc, hi: _Acc, pairs: Sequence[Tuple[float, float]], env: FBInterval) -> None:
    kappa, err = rd.dot_nearest(pairs)
    if kappa == 0.0 and err == 0.0:
        return
    # every monomial is bounded by 1 in magnitude, so err covers the error
    lo.add_slack(err)
    hi.add_slack(err)
    if kappa >= 0.0:
        lo.add_functional(env.L, kappa)
        hi.add_functional(env.U, kappa)
    else:
        lo.add_functional(env.U, kappa)
        hi.add_functional(env.L, kappa)


def _product_band(P: BoundaryFunctional, Q: BoundaryFunctional) -> Tuple[BoundaryFunctional, BoundaryFunctional]:
    lo, hi = _Acc(), _Acc()
    for acc in (lo, hi):
        acc.c.append((P.c, Q.c))
        for pid in P.params | Q.params:
            pa, pb = P.coef(pid)
            qa, qb = Q.coef(pid)
            acc.a[pid].extend(((pa, Q.c), (qa, P.c)))
            acc.b[pid].extend(((pb, Q.c), (qb, P.c)))
    params = sorted(P.params | Q.params)
    for idx, i in enumerate(params):
        pa, pb = P.coef(i)
        qa, qb = Q.coef(i)
        _add_term(lo, hi, ((pa, qa), (pb, qb)), envelope_cross_terms(i, None, "sqr"))
        _add_term(lo, hi, ((pa, qb), (pb, qa)), envelope_cross_terms(i, None, "xAbsSelf"))
        for j in params[idx + 1:]:
            pja, pjb = P.coef(j)
            qja, qjb = Q.coef(j)
            _add_term(lo, hi, ((pa, qja), (pja, qa)), envelope_cross_terms(i, j, "xx"))
            _add_term(lo, hi, ((pb, qjb), (pjb, qb)), envelope_cross_terms(i, j, "absAbs"))
            _add_term(lo, hi, ((pa, qjb), (pjb, qa)), envelope_cross_terms(i, j, "xAbs"))
            _add_term(lo, hi, ((pja, qb), (pb, qja)), envelope_cross_terms(j, i, "xAbs"))
    return lo.finish(True), hi.finish(False)


def mul(p: FBInterval, q: FBInterval) -> FBInterval:
    """Product band.

    Each of the four boundary products is expanded in the basis, its
    nonlinear monomials are replaced by their envelopes, and the four
    resulting bands are merged with :func:`f_down` / :func:`f_up`.
    """
    if not p.params and not q.params:
        return embed_classical(cl.mul(Interval(p.L.c, p.U.c), Interval(q.L.c, q.U.c)))
    lowers, uppers = [], []
    for P in (p.L, p.U):
        for Q in (q.L, q.U):
            lo, hi = _product_band(P, Q)
            lowers.append(lo)
            uppers.append(hi)
    return FBInterval(f_down(lowers), f_up(uppers))


# ---------------------------------------------------------------------------
# division


def _part_interval(x: float, y: float) -> Interval:
    return Interval(rd.add_down(x, y), rd.add_up(x, y))


def div(p: FBInterval, q: FBInterval) -> FBInterval:
    """Quotient band by per-parameter dimension reduction.

    The numerator functional is split into one-parameter pieces
    ``H_i = a_i x_i + b_i |x_i| + c / n``.  For each piece the denominator is
    bounded by one-parameter functionals (the other parameters set to their
    extreme contributions), so every candidate ratio is a Möbius function on
    each half-interval.  Those are fitted, glued, merged across candidates
    and summed over the parameters.
    """
    rq = to_interval(q)
    if rq.lo <= 0.0 <= rq.hi:
        raise ZeroInDenominator(f"denominator range {cl.format_interval(rq)} contains zero")
    if rq.hi < 0.0:
        return neg(div(p, neg(q)))
    params = sorted(p.params | q.params)
    if not params:
        return embed_classical(cl.div(Interval(p.L.c, p.U.c), Interval(q.L.c, q.U.c)))
    n = len(params)
    Lq, Uq = q.L, q.U
    lo_part = {j: min(0.0, rd.add_down(-Lq.coef(j)[0], Lq.coef(j)[1]), rd.add_down(*Lq.coef(j))) for j in params}
    hi_part = {j: max(0.0, rd.add_up(-Uq.coef(j)[0], Uq.coef(j)[1]), rd.add_up(*Uq.coef(j))) for j in params}

    lower_terms: List[BoundaryFunctional] = []
    upper_terms: List[BoundaryFunctional] = []
    for i in params:
        t_lo = Lq.c
        t_hi = Uq.c
        for j in params:
            if j != i:
                t_lo = rd.add_down(t_lo, lo_part[j])
                t_hi = rd.add_up(t_hi, hi_part[j])
        denominators = ((Lq.coef(i), t_lo), (Uq.coef(i), t_hi))
        for numer, is_lower in ((p.L, True), (p.U, False)):
            na, nb = numer.coef(i)
            share = cl.div(Interval.point(numer.c), Interval.point(float(n)))
            cands = []
            for (da, db), t in denominators:
                t_iv = Interval.point(t)
                left = Mobius(_part_interval(na, -nb), share, _part_interval(da, -db), t_iv)
                right = Mobius(_part_interval(na, nb), share, _part_interval(da, db), t_iv)
                band = glue(mobius_band(left, -1.0, 0.0), mobius_band(right, 0.0, 1.0), i)
                cands.append(band.L if is_lower else band.U)
            if is_lower:
                lower_terms.append(f_down(cands))
            else:
                upper_terms.append(f_up(cands))
    return _combine(((f, 1.0) for f in lower_terms), ((f, 1.0) for f in upper_terms))


# ---------------------------------------------------------------------------
# serialization


def to_csv_rows(p: FBInterval, registry: Optional[ParamRegistry] = None) -> List[Tuple[str, str, float, float, float]]:
    """Rows ``(bound, param, coef_x, coef_abs, const)``.

    The constant of each bound is carried by a row with an empty ``param``.
    """
    rows = []
    for tag, f in (("L", p.L), ("U", p.U)):
        rows.append((tag, "", 0.0, 0.0, f.c))
        for pid in sorted(f.params):
            name = registry.name(pid) if registry is not None else f"x{pid}"
            ai, bi = f.coef(pid)
            rows.append((tag, name, ai, bi, 0.0))
    return rows


def from_csv_rows(rows: Iterable[Sequence], registry: Optional[ParamRegistry] = None) -> FBInterval:
    parts: Dict[str, Dict] = {"L": {"c": 0.0, "a": {}, "b": {}}, "U": {"c": 0.0, "a": {}, "b": {}}}
    for bound, param, coef_x, coef_abs, const in rows:
        slot = parts[bound]
        if param == "" or param is None:
            slot["c"] = float(const)
            continue
        pid = registry.lookup(param) if registry is not None else int(str(param).lstrip("x"))
        slot["a"][pid] = float(coef_x)
        slot["b"][pid] = float(coef_abs)
    return FBInterval(
        BoundaryFunctional(parts["L"]["c"], parts["L"]["a"], parts["L"]["b"]),
        BoundaryFunctional(parts["U"]["c"], parts["U"]["a"], parts["U"]["b"]),
    )
