"""Reproducible numerical experiments: the Muller recurrence and random chains.

Both experiments are deterministic given their seed.  Random numbers come
from numpy's PCG64 bit generator; normal variates are produced with the
Box-Muller transform on its uniform stream so the sampler does not depend on
numpy's internal normal algorithm.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import classical as cl
from . import rounding as rd
from .classical import ENTIRE, Interval

__all__ = [
    "MuellerRow",
    "mueller_demo",
    "mueller_to_csv",
    "WIDTH_BINS",
    "bin_label",
    "ExperimentConfig",
    "ChainTable",
    "chain_experiment",
    "chain_to_csv",
    "chain_from_csv",
    "box_muller",
]


# ---------------------------------------------------------------------------
# Muller recurrence

_POINT_OPS: Dict[str, Tuple[Callable, Callable]] = {
    # (sub, div) for each rounding direction of the point column
    "up": (rd.sub_up, rd.div_up),
    "down": (rd.sub_down, rd.div_down),
    "nearest": (lambda a, b: a - b, lambda a, b: a / b),
}


@dataclass(frozen=True)
class MuellerRow:
    index: int
    point: float
    enclosure: Interval


def _mueller_point(prev2: float, prev1: float, mode: str) -> float:
    sub, div = _POINT_OPS[mode]
    if prev2 == 0.0 or prev1 == 0.0:
        return math.nan
    return sub(108.0, div(sub(815.0, div(1500.0, prev2)), prev1))


def _mueller_interval(prev2: Interval, prev1: Interval) -> Interval:
    c108, c815, c1500 = Interval.point(108.0), Interval.point(815.0), Interval.point(1500.0)
    if prev2 == ENTIRE or prev1 == ENTIRE:
        return ENTIRE
    if cl.is_zero_containing(prev2) or cl.is_zero_containing(prev1):
        return ENTIRE
    inner = cl.sub(c815, cl.div(c1500, prev2))
    return cl.sub(c108, cl.div(inner, prev1))


def mueller_demo(iterations: int = 30, point_mode: str = "up") -> List[MuellerRow]:
    """Iterate ``x = 108 - (815 - 1500 / x'') / x'`` from ``4, 4.25``.

    Rows are numbered from 1 (the first starting value).  The point column
    uses float arithmetic with every operation rounded in ``point_mode``
    ("up", "down" or "nearest"); the interval column uses outward-rounded
    classical intervals.  Once a divisor interval contains zero the
    enclosure becomes the entire real line and stays there.
    """
    if iterations < 2:
        raise ValueError("iterations must be at least 2")
    if point_mode not in _POINT_OPS:
        raise ValueError(f"point_mode must be one of {sorted(_POINT_OPS)}")
    points = [4.0, 4.25]
    boxes = [Interval.point(4.0), Interval.point(4.25)]
    for _ in range(iterations - 2):
        points.append(_mueller_point(points[-2], points[-1], point_mode))
        boxes.append(_mueller_interval(boxes[-2], boxes[-1]))
    return [MuellerRow(i + 1, p, b) for i, (p, b) in enumerate(zip(points, boxes))]


def mueller_to_csv(rows: Sequence[MuellerRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["i", "point", "lo", "hi"])
    for row in rows:
        writer.writerow([row.index, repr(row.point), repr(row.enclosure.lo), repr(row.enclosure.hi)])
    return buf.getvalue()


# ---------------------------------------------------------------------------
# random computation chains

WIDTH_BINS: Tuple[float, ...] = (0.0, 0.5, 1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 100.0, math.inf)


def bin_label(k: int) -> str:
    lo, hi = WIDTH_BINS[k], WIDTH_BINS[k + 1]
    return f"[{lo:g},{hi:g})"


def box_muller(gen: np.random.Generator, size: int) -> np.ndarray:
    """Standard normal variates from pairs of PCG64 uniforms."""
    u1 = 1.0 - gen.random(size)  # (0, 1], keeps the log finite
    u2 = gen.random(size)
    return np.sqrt(-2.0 * np.log(u1)) * np.cos(2.0 * math.pi * u2)


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one chain experiment.

    ``measurements`` intervals are drawn per trial; the chain is then
    extended one random operation at a time up to ``operations`` steps and
    the width histogram is recorded after every step.  The default mid
    range and width scale are the values that reproduce the published
    reference frequencies (see the README for the calibration).
    """

    seed: int = 0
    samples: int = 100_000
    measurements: int = 1
    operations: int = 20
    mid_half_range: float = 10.0
    width_sigma: float = 0.02
    out: Optional[str] = None

    def __post_init__(self) -> None:
        if self.samples < 1:
            raise ValueError("samples must be at least 1")
        if self.measurements < 1:
            raise ValueError("measurements must be at least 1")
        if self.operations < 0:
            raise ValueError("operations must be nonnegative")
        if not (self.mid_half_range > 0 and self.width_sigma > 0):
            raise ValueError("mid_half_range and width_sigma must be positive")


@dataclass
class ChainTable:
    """Width histogram: ``freq[k][n]`` is the share of trials whose width
    after ``n`` operations falls in bin ``k``."""

    measurements: int
    samples: int
    freq: np.ndarray = field(repr=False)
    rejected: int = 0

    def cell(self, k: int, n: int) -> float:
        return float(self.freq[k, n])

    @property
    def operations(self) -> int:
        return self.freq.shape[1] - 1


def _draw_measurements(gen: np.random.Generator, cfg: ExperimentConfig) -> Tuple[np.ndarray, np.ndarray, int]:
    shape = (cfg.samples, cfg.measurements)
    lo = np.empty(shape)
    hi = np.empty(shape)
    pending = np.ones(shape, dtype=bool)
    rejected = -int(pending.sum())
    while pending.any():
        count = int(pending.sum())
        rejected += count
        mids = (2.0 * gen.random(count) - 1.0) * cfg.mid_half_range
        half = np.abs(box_muller(gen, count)) * (0.5 * cfg.width_sigma)
        lo[pending] = rd.vsub_down(mids, half)
        hi[pending] = rd.vadd_up(mids, half)
        # keep only intervals whose mignitude is positive
        pending = (lo <= 0.0) & (hi >= 0.0)
    return lo, hi, rejected


def _vmul(a, b, c, d):
    lo = np.minimum.reduce([rd.vmul_down(a, c), rd.vmul_down(a, d), rd.vmul_down(b, c), rd.vmul_down(b, d)])
    hi = np.maximum.reduce([rd.vmul_up(a, c), rd.vmul_up(a, d), rd.vmul_up(b, c), rd.vmul_up(b, d)])
    return lo, hi


def _vdiv(a, b, c, d):
    # the divisor [c, d] never contains zero
    lo = np.minimum.reduce([rd.vdiv_down(a, c), rd.vdiv_down(a, d), rd.vdiv_down(b, c), rd.vdiv_down(b, d)])
    hi = np.maximum.reduce([rd.vdiv_up(a, c), rd.vdiv_up(a, d), rd.vdiv_up(b, c), rd.vdiv_up(b, d)])
    return lo, hi


def _histogram(lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    width = rd.vsub_up(hi, lo)
    width = np.where(np.isnan(width), math.inf, width)
    counts = np.histogram(width, bins=np.array(WIDTH_BINS))[0]
    # np.histogram closes the last bin on the right; infinity belongs there
    return counts / width.size


def chain_experiment(cfg: ExperimentConfig) -> ChainTable:
    """Random chains of interval operations on simulated measurements.

    Each trial draws ``cfg.measurements`` intervals that exclude zero, starts
    from one of them and applies ``cfg.operations`` operations, each chosen
    uniformly from ``+ - * /`` with a uniformly chosen measurement as the
    right operand.  All trials run as numpy vectors with outward rounding.
    """
    gen = np.random.Generator(np.random.PCG64(cfg.seed))
    lo_m, hi_m, rejected = _draw_measurements(gen, cfg)
    rows = np.arange(cfg.samples)
    pick = gen.integers(0, cfg.measurements, cfg.samples)
    a, b = lo_m[rows, pick], hi_m[rows, pick]
    columns = [_histogram(a, b)]
    for _ in range(cfg.operations):
        op = gen.integers(0, 4, cfg.samples)
        pick = gen.integers(0, cfg.measurements, cfg.samples)
        c, d = lo_m[rows, pick], hi_m[rows, pick]
        lo = np.empty_like(a)
        hi = np.empty_like(b)
        for code, kernel in enumerate((
            lambda a, b, c, d: (rd.vadd_down(a, c), rd.vadd_up(b, d)),
            lambda a, b, c, d: (rd.vsub_down(a, d), rd.vsub_up(b, c)),
            _vmul,
            _vdiv,
        )):
            lane = op == code
            if lane.any():
                lo[lane], hi[lane] = kernel(a[lane], b[lane], c[lane], d[lane])
        a, b = lo, hi
        columns.append(_histogram(a, b))
    return ChainTable(cfg.measurements, cfg.samples, np.array(columns).T, rejected)


CHAIN_FIELDS = ("measurements", "operations", "bin", "frequency")


def chain_to_csv(tables: Sequence[ChainTable]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CHAIN_FIELDS)
    for table in tables:
        for n in range(table.operations + 1):
            for k in range(len(WIDTH_BINS) - 1):
                writer.writerow([table.measurements, n, bin_label(k), repr(table.cell(k, n))])
    return buf.getvalue()


def chain_from_csv(text: str) -> Dict[Tuple[int, int, str], float]:
    """Parse :func:`chain_to_csv` output into ``{(S, n, bin): frequency}``."""
    reader = csv.DictReader(io.StringIO(text))
    if tuple(reader.fieldnames or ()) != CHAIN_FIELDS:
        raise ValueError(f"expected columns {CHAIN_FIELDS}, got {reader.fieldnames}")
    return {
        (int(r["measurements"]), int(r["operations"]), r["bin"]): float(r["frequency"])
        for r in reader
    }
