"""Acceptance criteria 1-9.

Each test prints exactly one ``criterion N: PASS`` or ``criterion N: FAIL``
line (visible with ``pytest -v``) and then asserts the same outcome.
"""

import itertools
import math
import time

import numpy as np
import pytest

import trees
from ivalkit import affine as af
from ivalkit import classical as cl
from ivalkit import experiments as ex
from ivalkit import fbia as fb
from ivalkit import linsys as ls
from ivalkit import metrics as mt
from ivalkit import rounding as rd
from ivalkit.affine import AffineForm
from ivalkit.classical import ENTIRE, Interval
from ivalkit.fbia import BoundaryFunctional as BF, FBInterval
from reference_values import CHAIN_SPOT_CELLS, LINSYS_CLASSICAL, LINSYS_SKEW_FB_X3, MUELLER

pytestmark = pytest.mark.acceptance


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, detail

    return emit


def test_criterion_1_rounding_conformance(report):
    start = time.perf_counter()
    result = rd.conformance_suite(n=100_000, seed=0)
    elapsed = time.perf_counter() - start
    ok = result.ok and not result.failures and elapsed < 30.0
    report(1, ok, f"{result.pairs} pairs, {len(result.failures)} failures, "
                  f"max gap {max(result.max_gap_ulps.values())} ulp, {elapsed:.1f} s on {result.backend}")


def _random_intervals(gen, count):
    kind = gen.integers(0, 4, count)
    a = gen.uniform(-1e3, 1e3, count)
    b = gen.uniform(-1e3, 1e3, count)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    # a quarter touch zero at one end, so chi = 0 cases are exercised
    lo = np.where(kind == 0, 0.0, lo)
    hi = np.where((kind == 0) & (hi <= 0.0), 1.0, hi)
    return [Interval(float(x), float(y)) for x, y in zip(lo, hi)]


def test_criterion_2_chi_of_product_and_width_identity(report):
    gen = np.random.default_rng(2)
    left, right = _random_intervals(gen, 100_000), _random_intervals(gen, 100_000)
    worst_chi = worst_wid = 0.0
    for a, b in zip(left, right):
        p = cl.mul(a, b)
        ca, cb = cl.chi(a), cl.chi(b)
        want = min(ca, cb, ca * cb)
        worst_chi = max(worst_chi, abs(cl.chi(p) - want) / max(abs(want), 1.0))
        width = cl.magnitude(a) * cl.magnitude(b) * (1.0 - cl.chi(p))
        worst_wid = max(worst_wid, abs(cl.wid(p) - width) / width)
    ok = worst_chi <= 1e-12 and worst_wid <= 1e-12
    report(2, ok, f"1e5 pairs, max relative error chi {worst_chi:.2e}, width {worst_wid:.2e}")


def test_criterion_3_mueller(report):
    start = time.perf_counter()
    rows = ex.mueller_demo(30)
    elapsed = time.perf_counter() - start
    problems = []
    if rows[28].point != 100.0:
        problems.append(f"row 29 point {rows[28].point!r}")
    if rows[15].enclosure != ENTIRE:
        problems.append("row 16 enclosure not entire")
    for row, (i, _, (lo, hi)) in zip(rows[:13], MUELLER):
        if abs(row.enclosure.lo - lo) > 1e-9 or abs(row.enclosure.hi - hi) > 1e-9:
            problems.append(f"row {i} enclosure {row.enclosure}")
    if elapsed >= 1.0:
        problems.append(f"{elapsed:.2f} s")
    report(3, not problems, "; ".join(problems) or f"point 100 at i=29, entire at i=16, rows 1-13 within 1e-9, {elapsed * 1e3:.1f} ms")


def test_criterion_4_affine_regression(report):
    e1 = af.from_interval(Interval(-1, 1), 1)
    shifted = af.sub(e1, af.constant(0.5))
    square = af.mul(shifted, shifted)
    cube = af.mul(square, shifted)
    checks = {
        "square form": square == AffineForm(0.75, {1: -1.0}, 0.5),
        "to_interval": af.to_interval(square) == Interval(-0.75, 2.25),
        "classical sqr": cl.sqr(Interval(-1.5, 0.5)) == Interval(0.0, 2.25),
        "cube areas": af.effective_and_extra_area(cube) == (2.5, 3.5),
    }
    failed = [k for k, v in checks.items() if not v]
    report(4, not failed, f"failed: {failed}" if failed else f"square {square.center} {square.terms} extra {square.extra}, cube areas (2.5, 3.5)")


def test_criterion_5_fb_showcase(report):
    x = fb.embed_param(0)
    shifted = fb.sub(x, fb.constant(0.5))
    product = fb.mul(shifted, shifted)
    want_product = FBInterval(BF(0.0, {0: -1.0}, {0: 1.0}), BF(0.25, {0: -1.0}, {0: 1.0}))
    inverse = lambda g: 0.5 * g  # noqa: E731
    halves = [fb.cheb_fit(lambda t: t * t, lo, hi, "convex", inverse).band() for lo, hi in ((-1.0, 0.0), (0.0, 1.0))]
    glued = fb.glue(*halves, 0)
    want_glued = FBInterval(BF(-0.25, {}, {0: 1.0}), BF(0.0, {}, {0: 1.0}))
    slope_err = abs(fb.XABS_SLOPE - 2 * (math.sqrt(2) - 1))
    offset_err = abs(fb.XABS_OFFSET - (3 - 2 * math.sqrt(2)))
    checks = {
        "product": product == want_product,
        "glue": glued == want_glued,
        "x|x| constants": slope_err <= 1e-15 and offset_err <= 1e-15,
    }
    failed = [k for k, v in checks.items() if not v]
    report(5, not failed, f"failed: {failed}" if failed else
           f"product and glue exact; x|x| constant errors {slope_err:.1e}, {offset_err:.1e}")


def test_criterion_6_integral_deviation(report):
    reports = mt.bench_deviation(all_paths=False)
    got = {}
    for r in reports:
        got.setdefault(r.expr, {})[r.arithmetic] = r
    problems = []
    pinned = [
        ("x", "classical", 4.0), ("x", "affine", 0.0), ("x", "fb", 0.0),
        ("x^2", "classical", 4.0), ("x^2", "affine", 4.0), ("x^2", "fb", 0.5),
        ("1/(x+2)", "classical", 1.333333333333333),
    ]
    for expr, arith, want in pinned:
        if abs(got[expr][arith].integral - want) > 1e-9:
            problems.append(f"{expr} {arith} = {got[expr][arith].integral!r}")
    if got["(x+2)/(x+2)"]["fb"].integral > 1e-9:
        problems.append(f"(x+2)/(x+2) fb = {got['(x+2)/(x+2)']['fb'].integral!r}")
    complete = [c for c in mt.CORPUS if None not in (c.classical, c.affine, c.fb)]
    for case in complete:
        row = got[case.expr]
        if not row["fb"].integral <= row["affine"].integral <= row["classical"].integral:
            problems.append(f"ordering on {case.expr}")
    deltas = [r.delta for r in reports if r.delta is not None]
    largest = max(reports, key=lambda r: abs(r.delta) if r.delta is not None else -1.0)
    report(6, not problems, "; ".join(problems) or
           f"pinned rows match; ordering holds on {len(complete)} complete rows; "
           f"{len(deltas)} deltas reported, largest {largest.delta:+.3f} ({largest.expr}, {largest.arithmetic})")


def test_criterion_7_interval_linear_systems(report):
    start = time.perf_counter()
    problems, notes = [], []
    for dep in ("symmetric", "skew"):
        system = ls.benchmark_system(dep)
        oracle = ls.corner_hull_oracle(system)
        cols = {a: ls.gauss_solve(system, a).x for a in ("classical", "affine", "fb")}
        for k, (iv, (lo, hi)) in enumerate(zip(cols["classical"], LINSYS_CLASSICAL)):
            if abs(iv.lo - lo) > 0.01 or abs(iv.hi - hi) > 0.01:
                problems.append(f"{dep} classical x{k + 1} {iv}")
        for arith in ("affine", "fb"):
            for k, (iv, (lo, hi)) in enumerate(zip(cols[arith], oracle.exact)):
                if not (iv.lo <= lo and hi <= iv.hi):
                    problems.append(f"(i) {dep} {arith} x{k + 1} misses the hull")
                if cl.wid(iv) > cl.wid(cols["classical"][k]):
                    problems.append(f"(ii) {dep} {arith} x{k + 1} wider than classical")
        if dep == "skew":
            x3 = cols["fb"][2]
            band = (0.85 * LINSYS_SKEW_FB_X3, 1.15 * LINSYS_SKEW_FB_X3)
            notes.append(f"skew fb x3 = [{x3.lo:.2f}, {x3.hi:.2f}]")
            if x3.lo != -x3.hi:
                problems.append("(iii) skew fb x3 not symmetric")
            if not band[0] <= x3.hi <= band[1]:
                problems.append(f"(iii) skew fb |x3| {x3.hi:.2f} outside [{band[0]:.2f}, {band[1]:.2f}]")
    elapsed = time.perf_counter() - start
    if elapsed >= 5.0:
        problems.append(f"{elapsed:.1f} s")
    detail = "; ".join(problems + notes) if problems else f"classical within 0.01, hulls contained, {notes[0]}, {elapsed:.1f} s"
    report(7, not problems, detail)


def test_criterion_8_chain_experiment(report):
    tables = {s: ex.chain_experiment(ex.ExperimentConfig(seed=s, samples=100_000, measurements=s)) for s in range(1, 7)}
    problems = []
    worst = 0.0
    for s, n, k, want in CHAIN_SPOT_CELLS:
        err = abs(tables[s].cell(k, n) - want)
        worst = max(worst, err)
        if err > 0.02:
            problems.append(f"S{s} n{n} {ex.bin_label(k)} {tables[s].cell(k, n):.3f} vs {want}")
    for s, table in tables.items():
        steps = np.diff(table.freq[0])
        if (steps > 0).any():
            problems.append(f"S{s} [0,0.5) increases at n={int(np.argmax(steps > 0)) + 1}")
    report(8, not problems, "; ".join(problems) or
           f"12 spot cells within {worst:.4f}; [0,0.5) strictly decreasing for S=1..6")


def test_criterion_9_property_suites(report):
    gen = np.random.default_rng(9)
    evaluated = rejected = bad_trees = 0
    while evaluated < 10_000:
        nparams = int(gen.integers(1, 4))
        tree = trees.random_tree(gen, nparams, 5)
        done, bad = trees.violations(tree, nparams)
        if not done:
            rejected += 1
            continue
        evaluated += 1
        bad_trees += bad > 0

    dominance_bad = 0
    for _ in range(2_000):
        n = int(gen.integers(1, 4))
        cands = []
        for _ in range(int(gen.integers(1, 6))):
            coef = lambda: float(gen.integers(-16, 17)) / 8  # noqa: E731
            cands.append(BF(coef(), {p: coef() for p in range(n)}, {p: coef() for p in range(n)}))
        up, down = fb.f_up(cands), fb.f_down(cands)
        for raw in itertools.product((-1.0, 0.0, 1.0), repeat=n):
            point = dict(enumerate(raw))
            for g in cands:
                if not down.exact(point) <= g.exact(point) <= up.exact(point):
                    dominance_bad += 1
    ok = bad_trees == 0 and dominance_bad == 0
    report(9, ok, f"{evaluated} trees evaluated ({rejected} rejected for a zero-containing divisor), "
                  f"{bad_trees} unsound; 2000 f_up/f_down sets, {dominance_bad} dominance violations")
