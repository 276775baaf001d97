"""Deviation metrics for comparing interval arithmetics.

The integral deviation of a band ``[L, U]`` over ``[-1, 1]^n`` is the volume
between its boundaries.  For the separable piecewise-linear functionals of
the functional-boundary arithmetic it has a closed form: ``x_i`` integrates
to zero and ``|x_i|`` to one, so

    deviation = 2^n (U.c - L.c) + 2^(n-1) * sum_i (U.b_i - L.b_i).

Classical intervals and affine forms are measured through their embedding
as constant or linear bands.  This module also carries the benchmark corpus
of expressions with the reference values they are compared against.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from . import _expr
from . import affine as af
from . import classical as cl
from . import fbia as fb
from . import rounding as rd
from .affine import AffineForm
from .classical import Interval
from .fbia import FBInterval

__all__ = [
    "DeviationReport",
    "BenchCase",
    "integral_deviation",
    "integral_deviation_quadrature",
    "integral_deviation_classical",
    "integral_deviation_affine",
    "cheb_deviation_bound",
    "evaluate_expression",
    "CORPUS",
    "EVAL_PATHS",
    "bench_deviation",
    "reports_to_csv",
    "reports_from_csv",
]


# ---------------------------------------------------------------------------
# metrics


def _param_count(e: FBInterval, nparams: Optional[int]) -> int:
    present = len(e.params)
    if nparams is None:
        return present
    if nparams < present:
        raise ValueError(f"band depends on {present} parameters but nparams={nparams}")
    return nparams


def integral_deviation(e: FBInterval, nparams: Optional[int] = None) -> float:
    """Closed-form volume between ``L`` and ``U`` over ``[-1, 1]^nparams``.

    Parameters that the band does not mention still multiply the volume by
    two each, so ``nparams`` defaults to the parameters present.
    """
    n = _param_count(e, nparams)
    dc = e.U.c - e.L.c
    db = math.fsum(e.U.coef(p)[1] - e.L.coef(p)[1] for p in e.params)
    return math.ldexp(dc, n) + math.ldexp(db, n - 1)


def integral_deviation_quadrature(e: FBInterval, nparams: Optional[int] = None, nodes: int = 101) -> float:
    """Midpoint rule on the cells of a ``nodes^n`` grid (an independent check).

    With an odd node count the kinks at 0 fall on cell boundaries, so the rule
    integrates the piecewise-linear band exactly up to rounding.
    """
    n = _param_count(e, nparams)
    params = sorted(e.params)
    cells = nodes - 1
    mids = -1.0 + (np.arange(cells) + 0.5) * (2.0 / cells)
    if not params:
        return math.ldexp(e.U.c - e.L.c, n)
    grids = np.meshgrid(*([mids] * len(params)), indexing="ij")
    diff = np.full(grids[0].shape, e.U.c - e.L.c)
    for pid, g in zip(params, grids):
        ua, ub = e.U.coef(pid)
        la, lb = e.L.coef(pid)
        diff = diff + (ua - la) * g + (ub - lb) * np.abs(g)
    volume = float(np.sum(diff)) * (2.0 / cells) ** len(params)
    return math.ldexp(volume, n - len(params))


def integral_deviation_classical(a: Interval, nparams: int) -> float:
    """``2^n * wid(a)``: a classical result is a constant band."""
    return math.ldexp(cl.wid(a), nparams)


def integral_deviation_affine(x: AffineForm, nparams: int, params: Optional[Iterable[int]] = None) -> float:
    """Deviation of an affine form read as a band over its parameters.

    Symbols in ``params`` (default ``0 .. nparams - 1``) are parameters and
    cost nothing; every other symbol, and the extra term, adds its
    coefficient to the half-width.
    """
    keep = set(range(nparams)) if params is None else set(params)
    band = fb.embed_affine(x, {p: p for p in keep})
    return integral_deviation(band, nparams)


def cheb_deviation_bound(e: FBInterval) -> float:
    """``max (U - L)`` over the parameter box.

    The difference is separable and piecewise linear, so its maximum is
    attained on ``{-1, 0, 1}^n`` and is found coordinate by coordinate.
    """
    total = rd.sub_up(e.U.c, e.L.c)
    for pid in e.params:
        ua, ub = e.U.coef(pid)
        la, lb = e.L.coef(pid)
        da, db = rd.sub_up(ua, la), rd.sub_up(ub, lb)
        da_lo = rd.sub_down(ua, la)
        total = rd.add_up(total, max(0.0, rd.add_up(-da_lo, db), rd.add_up(da, db)))
    return max(total, 0.0)


# ---------------------------------------------------------------------------
# expression evaluation in each arithmetic


def _nonneg_pow(x: float, k: int, down: bool) -> float:
    out = 1.0
    for _ in range(k):
        out = rd.mul_down(out, x) if down else rd.mul_up(out, x)
    return out


def classical_power(a: Interval, k: int) -> Interval:
    """Exact range of ``t^k`` over ``a`` (dependent power), outward rounded."""
    if k == 0:
        return Interval.point(1.0)
    if k % 2 == 0:
        return Interval(_nonneg_pow(cl.mignitude(a), k, True), _nonneg_pow(cl.magnitude(a), k, False))
    lo = -_nonneg_pow(-a.lo, k, False) if a.lo < 0 else _nonneg_pow(a.lo, k, True)
    hi = -_nonneg_pow(-a.hi, k, True) if a.hi < 0 else _nonneg_pow(a.hi, k, False)
    return Interval(lo, hi)


def _repeat(mul: Callable, one, value, k: int):
    if k == 0:
        return one
    out = value
    for _ in range(k - 1):
        out = mul(out, value)
    return out


def _classical_ops(path: str) -> Dict[str, Callable]:
    ops = {
        "num": Interval.point,
        "const": lambda iv: iv,
        "add": cl.add,
        "sub": cl.sub,
        "mul": cl.mul,
        "div": cl.div,
        "neg": cl.neg,
        "abs": cl.iabs,
    }
    if path == "pow":
        ops["pow"] = classical_power
    else:
        ops["pow"] = lambda v, k: _repeat(cl.mul, Interval.point(1.0), v, k)
    return ops


def _affine_ops(remainder: str) -> Dict[str, Callable]:
    mul = lambda x, y: af.mul(x, y, remainder)  # noqa: E731

    def const(iv: Interval) -> AffineForm:
        # an interval constant is not a parameter: it sits in the extra term
        m = cl.mid(iv)
        return AffineForm(m, {}, max(rd.sub_up(iv.hi, m), rd.sub_up(m, iv.lo)))

    return {
        "num": af.constant,
        "const": const,
        "add": af.add,
        "sub": af.sub,
        "mul": mul,
        "div": lambda x, d: af.div_by_interval(x, af.to_interval(d), remainder),
        "neg": af.neg,
        "pow": lambda v, k: _repeat(mul, af.constant(1.0), v, k),
    }


def _fb_ops() -> Dict[str, Callable]:
    return {
        "num": fb.constant,
        "const": fb.embed_classical,
        "add": fb.add,
        "sub": fb.sub,
        "mul": fb.mul,
        "div": fb.div,
        "neg": fb.neg,
        "pow": lambda v, k: _repeat(fb.mul, fb.constant(1.0), v, k),
    }


# arithmetic -> evaluation paths; the first one is the reference path
EVAL_PATHS: Dict[str, Tuple[str, ...]] = {
    "classical": ("mul", "pow"),
    "affine": ("generic", "square"),
    "fb": ("fb",),
}


def evaluate_expression(text: str, arithmetic: str, path: Optional[str] = None):
    """Evaluate ``text`` with its names as parameters on [-1, 1].

    Names are numbered in sorted order.  Returns ``(value, names)``.
    Powers are repeated products except on the classical ``"pow"`` path,
    which uses the dependent power.
    """
    node = _expr.parse(text)
    names = _expr.variables(node)
    if arithmetic not in EVAL_PATHS:
        raise ValueError(f"unknown arithmetic {arithmetic!r}")
    path = path or EVAL_PATHS[arithmetic][0]
    if path not in EVAL_PATHS[arithmetic]:
        raise ValueError(f"unknown evaluation path {path!r} for {arithmetic}")
    if arithmetic == "classical":
        ops = _classical_ops(path)
        env = {name: Interval(-1.0, 1.0) for name in names}
    elif arithmetic == "affine":
        ops = _affine_ops(path)
        env = {name: af.from_interval(Interval(-1.0, 1.0), pid) for pid, name in enumerate(names)}
    else:
        ops = _fb_ops()
        env = {name: fb.embed_param(pid) for pid, name in enumerate(names)}
    return _expr.evaluate(node, ops, env), names


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class DeviationReport:
    expr: str
    arithmetic: str
    integral: float
    cheb_bound: float
    eval_path: str
    reference: Optional[float] = None

    def __post_init__(self) -> None:
        if not (self.integral >= -1e-12 and self.cheb_bound >= -1e-12):
            raise ValueError(f"negative deviation for {self.expr!r}: {self.integral}, {self.cheb_bound}")

    @property
    def delta(self) -> Optional[float]:
        return None if self.reference is None else self.integral - self.reference


@dataclass(frozen=True)
class BenchCase:
    """One corpus row with its reference values (``None`` when absent).

    ``asserted`` lists the arithmetics whose reference value is unambiguous
    and must be reproduced; the others are reported with their delta.
    """

    expr: str
    classical: Optional[float]
    affine: Optional[float]
    fb: Optional[float]
    asserted: Tuple[str, ...] = ()

    def reference(self, arithmetic: str) -> Optional[float]:
        return getattr(self, arithmetic)


def _c(expr, classical, affine, fbv, asserted=()):
    return BenchCase(expr, classical, affine, fbv, tuple(asserted))


CORPUS: Tuple[BenchCase, ...] = (
    _c("1", 0, 0, 0, ("classical", "affine", "fb")),
    _c("x", 4, 0, 0, ("classical", "affine", "fb")),
    _c("x^2", 4, 4, 0.5, ("classical", "affine", "fb")),
    _c("x^3", 4, 4, 0.81129150101524),
    _c("x^4", 2, 4, 0.712626265847085),
    _c("x^5", 4, 4, 0.96166573212244),
    _c("x^6", 4, 4, 0.87830923447167),
    _c("x^7", 4, 4, 1.037794268789845),
    _c("x^8", 4, 4, 0.97285398143004),
    _c("x^9", 4, 4, 1.08576770451591),
    _c("x^10", 4, 4, 1.03154556274759),
    _c("x*[-1,0]", 4, 2, 1),
    _c("x*[0,1]", 4, 2, 1),
    _c("x*[-1,-0.5]", 4, 1, 0.5),
    _c("x*[-0.5,0]", 2, 1, 0.5),
    _c("x*[0,0.5]", 2, 1, 0.5),
    _c("x*[0.5,1]", 4, 1, 0.5),
    _c("x*[-1,1]", 4, 4, 2),
    _c("x*y", 8, 8, 2),
    _c("y*x", 8, 8, 2),
    _c("x^2*y", 8, 8, 1.75),
    _c("x*y*x", 8, 8, 2.51471862576143),
    _c("y*x^2", 8, 8, 2.51471862576143),
    _c("x^3*y", 8, 8, 2),
    _c("x^2*y*x", 8, 8, 2.51471862576143),
    _c("x*y*x^2", 8, 8, 2.68376618407357),
    _c("y*x^3", 8, 8, 2.68376618407357),
    _c("x^4*y", 8, 8, 1.68658008588991),
    _c("x^3*y*x", 8, 8, 2.42640687119286),
    _c("x^2*y*x^2", 8, 8, 2.68376618407357),
    _c("x*y*x^3", 8, 8, 2.78344186487968),
    _c("y*x^4", 8, 8, 2.78344186487968),
    _c("x^5*y", 8, 8, 2),
    _c("x^4*y*x", 8, 8, 2.50367965644036),
    _c("x^3*y*x^2", 8, 8, 2.65476220843933),
    _c("x^2*y*x^3", 8, 8, 2.78344186487968),
    _c("x*y*x^5", 8, 8, 2.83068004995108),
    _c("y*x^5", 8, 8, 2.83068004995108),
    _c("(x+2)/(x+2)", 5.333333333333333, None, 0.000000000000002, ("classical", "fb")),
    _c("1/(x+2)", 1.333333333333333, None, 0.154335453948487, ("classical",)),
    _c("1/(x+3)", 0.5, None, 0.0309600827457410),
    _c("1/(x+4)", 0.266666666666667, None, 0.0111669633764997),
    _c("1/(x+5)", 0.166666666666667, None, 0.0052557816242133),
    _c("1/(x+[2,3])", 1.5, None, 0.473886926876691),
    _c("1/(x+[3,4])", 0.6, None, 0.20859862653166603),
    _c("1/(x+[4,5])", 0.333333333333333, None, 0.118389836375957),
    _c("1/(x+[5,10])", 0.318181818181818, None, 0.21638703599257883),
    _c("x/[1,2]", 4, None, 0.25),
    _c("x/[2,3]", 2, None, 0.083333333333334),
    _c("x/[3,4]", 1.333333333333333, None, 0.0416666666666671),
    _c("x/[4,5]", 1, None, 0.0250000000000002),
    _c("x/[5,10]", 0.8, None, 0.050000000000001),
    _c("x/(y+2)", 8, None, 0.666666666666671),
    _c("y/(x+2)", 8, None, 0.666666666666671),
    _c("x^2/(y+2)", 8, None, 1.35416666666667),
    _c("x/(y+2)*x", 8, None, 1.67647908384096),
    _c("1/(y+2)*x^2", 8, None, 1.74235739103973),
    _c("x^3/(y+2)", 8, None, 1.63645985547802),
    _c("x^2/(y+2)*x", 8, None, 1.97449798090104),
    _c("x/(y+2)*x^2", 8, None, 1.93790283299493),
    _c("1/(y+2)*x^3", 8, None, 2.03222087986149),
    _c("x^4/(y+2)", 8, None, 1.44449780742915),
    _c("x^3/(y+2)*x", 8, None, 1.7585136523794),
    _c("x^2/(y+2)*x^2", 8, None, 1.78234721543857),
    _c("x/(y+2)*x^3", 8, None, 1.81505575983538),
    _c("1/(y+2)*x^4", 8, None, 1.98006435610048),
    _c("x^5/(y+2)", 8, None, 1.72751020178193),
    _c("x^4/(y+2)*x", 8, None, 2.04570366923249),
    _c("x^3/(y+2)*x^2", 8, None, 2.06395221667211),
    _c("x^2/(y+2)*x^3", 8, None, 2.08978012172187),
    _c("x/(y+2)*x^5", 8, None, 2.09916240309717),
    _c("1/(y+2)*x^5", 8, None, 2.20737939401541),
)


def _measure(value, arithmetic: str, nparams: int) -> Tuple[float, float]:
    if arithmetic == "classical":
        return integral_deviation_classical(value, nparams), cl.wid(value)
    if arithmetic == "affine":
        band = fb.embed_affine(value, {p: p for p in range(nparams)})
    else:
        band = value
    return integral_deviation(band, nparams), cheb_deviation_bound(band)


def bench_case(case: BenchCase, arithmetic: str, path: Optional[str] = None) -> DeviationReport:
    value, names = evaluate_expression(case.expr, arithmetic, path)
    integral, cheb = _measure(value, arithmetic, len(names))
    path = path or EVAL_PATHS[arithmetic][0]
    reference = case.reference(arithmetic) if path == EVAL_PATHS[arithmetic][0] else None
    return DeviationReport(case.expr, arithmetic, integral, cheb, path, reference)


def bench_deviation(
    cases: Sequence[BenchCase] = CORPUS,
    arithmetics: Sequence[str] = ("classical", "affine", "fb"),
    all_paths: bool = True,
) -> List[DeviationReport]:
    """Evaluate every case in every arithmetic (and every path if asked).

    The reference value is attached to the reference path only.
    """
    out: List[DeviationReport] = []
    for case in cases:
        for arithmetic in arithmetics:
            paths = EVAL_PATHS[arithmetic] if all_paths else EVAL_PATHS[arithmetic][:1]
            for path in paths:
                out.append(bench_case(case, arithmetic, path))
    return out


CSV_FIELDS = ("expr", "arithmetic", "integral", "cheb_bound", "eval_path")


def reports_to_csv(reports: Iterable[DeviationReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for r in reports:
        writer.writerow((r.expr, r.arithmetic, repr(r.integral), repr(r.cheb_bound), r.eval_path))
    return buf.getvalue()


def reports_from_csv(text: str) -> List[DeviationReport]:
    rows = list(csv.DictReader(io.StringIO(text)))
    return [
        DeviationReport(r["expr"], r["arithmetic"], float(r["integral"]), float(r["cheb_bound"]), r["eval_path"])
        for r in rows
    ]


def deltas_to_csv(reports: Iterable[DeviationReport]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(("expr", "arithmetic", "eval_path", "integral", "reference", "delta"))
    for r in reports:
        if r.reference is None:
            continue
        writer.writerow((r.expr, r.arithmetic, r.eval_path, repr(r.integral), repr(r.reference), repr(r.delta)))
    return buf.getvalue()
