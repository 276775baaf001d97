"""``ivalkit`` command-line interface.

Every command writes CSV to stdout (or to ``--out``).  Exit status is 0 on
success, 2 when a checked invariant fails and 3 on bad input.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import _expr
from . import classical as cl
from . import experiments as ex
from . import fbia as fb
from . import linsys as ls
from . import metrics as mt
from . import rounding as rd
from ._registry import ParamRegistry

log = logging.getLogger("ivalkit")

EXIT_OK = 0
EXIT_INVARIANT = 2
EXIT_INPUT = 3

DEFAULT_SAMPLES = 100_000


class InputError(Exception):
    """Bad command-line input; reported with exit status 3."""


# ---------------------------------------------------------------------------
# output helpers


def _rows_to_csv(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# check-rounding


def cmd_check_rounding(args) -> int:
    count = args.n if args.n is not None else args.samples
    if count < 0:
        raise InputError("--n must be nonnegative")
    if args.backend and args.backend not in rd.available_backends():
        raise InputError(f"backend {args.backend!r} is not available; choose from {rd.available_backends()}")
    report = rd.conformance_suite(n=count, seed=args.seed, backend=args.backend)
    failures: Dict[str, int] = {}
    for op, *_ in report.failures:
        failures[op] = failures.get(op, 0) + 1
    rows = [(op, repr(gap), failures.get(op, 0)) for op, gap in sorted(report.max_gap_ulps.items())]
    _emit(_rows_to_csv(("op", "max_gap_ulps", "failures"), rows), args.out)
    log.info("%d pairs on backend %s in %.2f s", report.pairs, report.backend, report.seconds)
    return EXIT_OK if report.ok else EXIT_INVARIANT


# ---------------------------------------------------------------------------
# mueller


def cmd_mueller(args) -> int:
    try:
        rows = ex.mueller_demo(args.iterations, args.point_mode)
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    _emit(ex.mueller_to_csv(rows), args.out)
    ok = True
    for row in rows:
        if math.isfinite(row.point) and not cl.contains(row.enclosure, row.point):
            log.error("row %d: point value %r escapes %s", row.index, row.point, row.enclosure)
            ok = False
    return EXIT_OK if ok else EXIT_INVARIANT


# ---------------------------------------------------------------------------
# chain


def cmd_chain(args) -> int:
    tables = []
    for count in args.measurements:
        try:
            cfg = ex.ExperimentConfig(
                seed=args.seed + count,
                samples=args.samples,
                measurements=count,
                operations=args.operations,
                mid_half_range=args.mid_half_range,
                width_sigma=args.width_sigma,
                out=args.out,
            )
        except ValueError as exc:
            raise InputError(str(exc)) from exc
        tables.append(ex.chain_experiment(cfg))
    _emit(ex.chain_to_csv(tables), args.out)
    ok = all(np.allclose(t.freq.sum(axis=0), 1.0) for t in tables)
    return EXIT_OK if ok else EXIT_INVARIANT


# ---------------------------------------------------------------------------
# bench-deviation


def _ordering_violations(reports: Sequence[mt.DeviationReport]) -> List[str]:
    by_expr: Dict[str, Dict[str, float]] = {}
    for r in reports:
        if r.eval_path == mt.EVAL_PATHS[r.arithmetic][0]:
            by_expr.setdefault(r.expr, {})[r.arithmetic] = r.integral
    bad = []
    for expr, vals in by_expr.items():
        if {"classical", "affine", "fb"} <= vals.keys():
            slack = 1e-9 * max(1.0, vals["classical"])
            if not (vals["fb"] <= vals["affine"] + slack and vals["affine"] <= vals["classical"] + slack):
                bad.append(expr)
    return bad


def cmd_bench_deviation(args) -> int:
    if args.expr:
        cases = [mt.BenchCase(e, None, None, None) for e in args.expr]
    else:
        cases = list(mt.CORPUS)
    try:
        reports = mt.bench_deviation(cases, args.arith, all_paths=not args.reference_paths)
    except (_expr.ExprError, ValueError, cl.IntervalError) as exc:
        raise InputError(str(exc)) from exc
    _emit(mt.reports_to_csv(reports), args.out)
    if args.deltas:
        with open(args.deltas, "w", encoding="utf-8", newline="") as fh:
            fh.write(mt.deltas_to_csv(reports))
    bad = _ordering_violations(reports)
    for expr in bad:
        log.error("ordering fb <= affine <= classical fails for %r", expr)
    return EXIT_INVARIANT if bad else EXIT_OK


# ---------------------------------------------------------------------------
# solve


def cmd_solve(args) -> int:
    try:
        system = ls.load_system(args.file) if args.file else ls.benchmark_system(args.builtin)
    except OSError as exc:
        raise InputError(str(exc)) from exc
    except ls.SystemInputError as exc:
        raise InputError(str(exc)) from exc
    try:
        enc = ls.gauss_solve(system, args.arith, shadow=not args.pure)
    except ls.ZeroPivot as exc:
        raise InputError(f"elimination failed: {exc}") from exc
    rows = [(i + 1, repr(c.lo), repr(c.hi), enc.method) for i, c in enumerate(enc.x)]
    ok = True
    if args.oracle:
        try:
            oracle = ls.corner_hull_oracle(system)
        except (ls.SystemInputError, ls.SingularRealization) as exc:
            raise InputError(str(exc)) from exc
        rows += [(i + 1, repr(c.lo), repr(c.hi), oracle.method) for i, c in enumerate(oracle.x)]
        for i, ((lo, hi), c) in enumerate(zip(oracle.exact, enc.x)):
            if not (c.lo <= lo and hi <= c.hi):
                log.error("component %d: enclosure %s misses the corner hull", i + 1, c)
                ok = False
    _emit(_rows_to_csv(("component", "lo", "hi", "method"), rows), args.out)
    return EXIT_OK if ok else EXIT_INVARIANT


# ---------------------------------------------------------------------------
# fb-eval


def _split_band(text: str) -> Optional[Tuple[str, str]]:
    """Split ``[lower, upper]`` at its top-level comma, else ``None``."""
    s = text.strip()
    if not (s.startswith("[") and s.endswith("]")):
        return None
    depth = 0
    for i, ch in enumerate(s):
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth -= 1
            if depth == 0 and i != len(s) - 1:
                return None
        elif ch == "," and depth == 1:
            return s[1:i], s[i + 1:-1]
    return None


def _linear_ops() -> Dict[str, Callable]:
    """Fold a literal over the basis ``{1, x, |x|}`` into a functional."""
    BF = fb.BoundaryFunctional

    def const_of(f: BF) -> float:
        if f.params:
            raise _expr.ExprError("only constant factors are allowed in a boundary literal")
        return f.c

    def scale(f: BF, k: float) -> BF:
        return BF(f.c * k, {p: v * k for p, v in f.a.items()}, {p: v * k for p, v in f.b.items()})

    def plus(f: BF, g: BF, sign: float = 1.0) -> BF:
        a = dict(f.a)
        b = dict(f.b)
        for p, v in g.a.items():
            a[p] = a.get(p, 0.0) + sign * v
        for p, v in g.b.items():
            b[p] = b.get(p, 0.0) + sign * v
        return BF(f.c + sign * g.c, a, b)

    def absval(f: BF) -> BF:
        if f.c == 0.0 and not f.b and len(f.a) == 1:
            (p, v), = f.a.items()
            return BF(0.0, {}, {p: abs(v)})
        raise _expr.ExprError("|.| may only enclose a single parameter in a boundary literal")

    def mul(f: BF, g: BF) -> BF:
        return scale(g, const_of(f)) if not f.params else scale(f, const_of(g))

    def power(f: BF, k: int) -> BF:
        if k == 1:
            return f
        if k == 0:
            return BF(1.0)
        return BF(const_of(f) ** k)

    def const(iv: cl.Interval) -> BF:
        if iv.lo != iv.hi:
            raise _expr.ExprError("interval constants are not allowed in a boundary literal")
        return BF(iv.lo)

    return {
        "num": BF,
        "const": const,
        "add": plus,
        "sub": lambda f, g: plus(f, g, -1.0),
        "mul": mul,
        "div": lambda f, g: scale(f, 1.0 / const_of(g)),
        "neg": lambda f: scale(f, -1.0),
        "pow": power,
        "abs": absval,
    }


def fb_from_text(text: str) -> Tuple[fb.FBInterval, List[str]]:
    """A band from ``[L, U]`` literals or from an expression evaluated in
    functional-boundary arithmetic.  Returns the band and parameter names."""
    band = _split_band(text)
    if band is None:
        value, names = mt.evaluate_expression(text, "fb")
        return value, names
    nodes = [_expr.parse(part) for part in band]
    names = sorted(set(_expr.variables(nodes[0])) | set(_expr.variables(nodes[1])))
    ids = {name: pid for pid, name in enumerate(names)}
    env = {name: fb.BoundaryFunctional(0.0, {pid: 1.0}) for name, pid in ids.items()}
    ops = _linear_ops()
    lower, upper = (_expr.evaluate(node, ops, env) for node in nodes)
    return fb.FBInterval(lower, upper), names


def _svg_band(xs: np.ndarray, lows: List[float], highs: List[float], name: str) -> str:
    w, h, pad = 480, 320, 30
    ys = [v for v in lows + highs if math.isfinite(v)] or [0.0]
    y0, y1 = min(ys), max(ys)
    if y1 == y0:
        y0, y1 = y0 - 1.0, y1 + 1.0

    def px(x: float) -> float:
        return pad + (x + 1.0) / 2.0 * (w - 2 * pad)

    def py(y: float) -> float:
        return h - pad - (y - y0) / (y1 - y0) * (h - 2 * pad)

    def line(vals: List[float], colour: str) -> str:
        pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, vals))
        return f'<polyline fill="none" stroke="{colour}" stroke-width="2" points="{pts}"/>'

    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}">\n'
        f'<rect width="{w}" height="{h}" fill="white"/>\n'
        f'<line x1="{pad}" y1="{py(0.0) if y0 <= 0 <= y1 else h - pad:.2f}" x2="{w - pad}" '
        f'y2="{py(0.0) if y0 <= 0 <= y1 else h - pad:.2f}" stroke="#999"/>\n'
        f"{line(lows, '#1f77b4')}\n{line(highs, '#d62728')}\n"
        f'<text x="{pad}" y="{pad - 10}" font-size="12">L (blue) and U (red) over {name} in [-1, 1], '
        f"range [{y0:.4g}, {y1:.4g}]</text>\n</svg>\n"
    )


def cmd_fb_eval(args) -> int:
    try:
        band, names = fb_from_text(args.band)
    except (_expr.ExprError, ValueError, cl.IntervalError) as exc:
        raise InputError(str(exc)) from exc
    if args.coefficients:
        registry = ParamRegistry()
        for name in names:
            registry.register(None, name)
        rows = [(b, p, repr(cx), repr(ca), repr(c0)) for b, p, cx, ca, c0 in fb.to_csv_rows(band, registry)]
        _emit(_rows_to_csv(("bound", "param", "coef_x", "coef_abs", "const"), rows), args.out)
        return EXIT_OK
    fixed: Dict[str, float] = {}
    for item in args.fix or []:
        name, _, value = item.partition("=")
        if name not in names:
            raise InputError(f"--fix names unknown parameter {name!r}")
        try:
            fixed[name] = float(value)
        except ValueError:
            raise InputError(f"--fix value for {name!r} is not a number") from None
        if not -1.0 <= fixed[name] <= 1.0:
            raise InputError(f"--fix value for {name!r} lies outside [-1, 1]")
    free = [n for n in names if n not in fixed]
    if len(free) > 1:
        raise InputError(f"sample one parameter at a time; fix the others with --fix (free: {free})")
    if args.points < 2:
        raise InputError("--points must be at least 2")
    axis = free[0] if free else (names[0] if names else "x")
    xs = np.linspace(-1.0, 1.0, args.points)
    base = {names.index(n): v for n, v in fixed.items()}
    rows, lows, highs = [], [], []
    ok = True
    for x in xs:
        point = dict(base)
        if free:
            point[names.index(axis)] = float(x)
        lo, hi = band.at(point)
        ok &= lo <= hi
        lows.append(lo)
        highs.append(hi)
        rows.append((repr(float(x)), repr(lo), repr(hi)))
    _emit(_rows_to_csv((axis, "L", "U"), rows), args.out)
    if args.svg:
        with open(args.svg, "w", encoding="utf-8") as fh:
            fh.write(_svg_band(xs, lows, highs, axis))
    return EXIT_OK if ok else EXIT_INVARIANT


# ---------------------------------------------------------------------------
# argument parsing


def _measurement_list(text: str) -> List[int]:
    try:
        values = [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated counts, got {text!r}") from None
    if not values or min(values) < 1:
        raise argparse.ArgumentTypeError("measurement counts must be positive")
    return values


def _global_options(parser: argparse.ArgumentParser, suppress: bool) -> None:
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    parser.add_argument("--seed", type=int, default=default(0), help="RNG seed (default 0)")
    parser.add_argument("--samples", type=int, default=default(DEFAULT_SAMPLES),
                        help=f"Monte Carlo sample count (default {DEFAULT_SAMPLES})")
    parser.add_argument("--out", default=default(None), help="write CSV here instead of stdout")
    parser.add_argument("-v", "--verbose", action="store_true", default=default(False))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ivalkit", description=__doc__.splitlines()[0])
    _global_options(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name: str, func, help_text: str) -> argparse.ArgumentParser:
        p = sub.add_parser(name, help=help_text, description=help_text)
        _global_options(p, suppress=True)
        p.set_defaults(func=func)
        return p

    p = command("check-rounding", cmd_check_rounding, "directed-rounding conformance against exact rationals")
    p.add_argument("--n", type=int, default=None, help="random operand pairs (default: --samples)")
    p.add_argument("--backend", default=None, help="rounding backend (software or mpfr)")

    p = command("mueller", cmd_mueller, "point and interval evaluation of the Muller recurrence")
    p.add_argument("--iterations", type=int, default=30)
    p.add_argument("--point-mode", choices=("up", "down", "nearest"), default="up",
                   help="rounding direction of the point column (default up)")

    p = command("chain", cmd_chain, "width histograms of random interval operation chains")
    p.add_argument("--measurements", type=_measurement_list, default=[1, 2, 3, 4, 5, 6],
                   help="comma-separated measurement counts (default 1,2,3,4,5,6)")
    p.add_argument("--operations", type=int, default=20, help="longest chain (default 20)")
    p.add_argument("--mid-half-range", type=float, default=ex.ExperimentConfig.mid_half_range,
                   help="midpoints are uniform on [-R, R]")
    p.add_argument("--width-sigma", type=float, default=ex.ExperimentConfig.width_sigma,
                   help="widths are |N(0, sigma)|")

    p = command("bench-deviation", cmd_bench_deviation, "integral deviation of the benchmark corpus")
    p.add_argument("--arith", nargs="+", choices=("classical", "affine", "fb"),
                   default=["classical", "affine", "fb"])
    p.add_argument("--expr", action="append", help="evaluate this expression instead of the corpus")
    p.add_argument("--reference-paths", action="store_true", help="skip the alternative evaluation paths")
    p.add_argument("--deltas", help="also write per-row deltas against the reference values here")

    p = command("solve", cmd_solve, "interval Gaussian elimination")
    p.add_argument("--arith", choices=("classical", "affine", "fb"), default="classical")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--file", help="JSON system description")
    src.add_argument("--builtin", choices=("independent", "symmetric", "skew"),
                     help="the built-in 3x3 benchmark with the given dependency pattern")
    p.add_argument("--oracle", action="store_true", help="append the exact corner hull and check containment")
    p.add_argument("--pure", action="store_true", help="do not intersect with a classical shadow")

    p = command("fb-eval", cmd_fb_eval, "sample a functional-boundary band on a grid")
    p.add_argument("band", help='"[L, U]" literal such as "[|x|-x, |x|-x+0.25]", or an expression')
    p.add_argument("--points", type=int, default=21, help="grid points on [-1, 1] (default 21)")
    p.add_argument("--fix", action="append", metavar="NAME=VALUE", help="pin a parameter")
    p.add_argument("--coefficients", action="store_true", help="print bound,param,coef_x,coef_abs,const rows")
    p.add_argument("--svg", help="also draw the band as an SVG file")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_INPUT
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="ivalkit: %(levelname)s: %(message)s")
    if args.samples < 1:
        log.error("--samples must be at least 1")
        return EXIT_INPUT
    try:
        return args.func(args)
    except InputError as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
