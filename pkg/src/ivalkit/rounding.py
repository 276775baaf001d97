"""Directed-rounding kernel for float64 endpoint arithmetic.

Python exposes no portable control over the FPU rounding mode, so the default
backend computes every operation in round-to-nearest and then recovers the
exact sign of the rounding error with error-free transformations (TwoSum,
Dekker's TwoProduct, and the division residual).  The nearest result is moved
one unit toward the requested direction only when the error points the wrong
way, which yields the correctly rounded directed result.  Operands whose
magnitudes defeat the error-free transformations (huge values near overflow,
products and quotients deep in the subnormal range) are settled with exact
rational arithmetic instead.

A second backend drives MPFR through ``gmpy2`` with IEEE binary64 contexts
(``RoundDown``/``RoundUp`` with subnormal emulation); it stands in for
hardware mode switching and is used to cross-check the software backend.

The active mode lives on a per-thread stack managed by
:class:`RoundingContext`.
"""

from __future__ import annotations

import enum
import math
import random
import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

__all__ = [
    "Mode",
    "RoundingContext",
    "current_mode",
    "set_backend",
    "get_backend",
    "available_backends",
    "add_down",
    "add_up",
    "sub_down",
    "sub_up",
    "mul_down",
    "mul_up",
    "div_down",
    "div_up",
    "sqrt_down",
    "sqrt_up",
    "add",
    "sub",
    "mul",
    "div",
    "ulp",
    "dot_nearest",
    "vadd_down",
    "vadd_up",
    "vsub_down",
    "vsub_up",
    "vmul_down",
    "vmul_up",
    "vdiv_down",
    "vdiv_up",
    "ConformanceReport",
    "conformance_suite",
]

INF = math.inf
MAX_FLOAT = 1.7976931348623157e308

# Beyond these magnitudes the Veltkamp split overflows or the product error
# term is no longer representable, so the exact rational path takes over.
_SPLIT_LIMIT = 2.0 ** 995
_TINY_LIMIT = 2.0 ** -968
_SPLITTER = 134217729.0  # 2**27 + 1


class Mode(enum.Enum):
    NEAREST_EVEN = "nearest"
    TOWARD_NEG_INF = "down"
    TOWARD_POS_INF = "up"


_DOWN = Mode.TOWARD_NEG_INF
_UP = Mode.TOWARD_POS_INF


# ---------------------------------------------------------------------------
# error-free transformations


def _two_sum(a: float, b: float) -> Tuple[float, float]:
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a: float) -> Tuple[float, float]:
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a: float, b: float) -> Tuple[float, float]:
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _step(value: float, err_sign: float, mode: Mode) -> float:
    """Move a nearest-rounded value one unit when ``err_sign`` (exact minus
    value) disagrees with the requested direction."""
    if mode is _DOWN and err_sign < 0:
        return math.nextafter(value, -INF)
    if mode is _UP and err_sign > 0:
        return math.nextafter(value, INF)
    return value


def _settle_exact(approx: float, exact: Fraction, mode: Mode) -> float:
    if math.isinf(approx):
        # nearest overflowed although the exact value is finite
        if mode is _DOWN and approx > 0:
            return MAX_FLOAT
        if mode is _UP and approx < 0:
            return -MAX_FLOAT
        return approx
    diff = exact - Fraction(approx)
    return _step(approx, diff, mode)


def _overflowed(value: float, mode: Mode) -> float:
    if value > 0:
        return MAX_FLOAT if mode is _DOWN else INF
    return -INF if mode is _DOWN else -MAX_FLOAT


def _ieee_div(a: float, b: float) -> float:
    if b == 0.0:
        if a == 0.0 or math.isnan(a):
            return math.nan
        sign = math.copysign(1.0, a) * math.copysign(1.0, b)
        return math.copysign(INF, sign)
    return a / b


# ---------------------------------------------------------------------------
# software backend


def _soft_add(a: float, b: float, mode: Mode) -> float:
    s = a + b
    if not math.isfinite(s):
        if math.isfinite(a) and math.isfinite(b):
            return _overflowed(s, mode)
        return s
    if mode is Mode.NEAREST_EVEN:
        return s
    if s == 0.0:
        # exact cancellation; IEEE gives -0 when rounding toward -inf
        if a == -b and mode is _DOWN and (a != 0.0 or math.copysign(1.0, a) < 0 or math.copysign(1.0, b) < 0):
            return -0.0
        return s
    _, err = _two_sum(a, b)
    return _step(s, err, mode)


def _soft_sub(a: float, b: float, mode: Mode) -> float:
    return _soft_add(a, -b, mode)


def _soft_mul(a: float, b: float, mode: Mode) -> float:
    p = a * b
    if mode is Mode.NEAREST_EVEN or a == 0.0 or b == 0.0 or math.isnan(p):
        return p
    if not math.isfinite(a) or not math.isfinite(b):
        return p
    if math.isinf(p):
        return _overflowed(p, mode)
    # the split partial products stay finite only below the split limit
    if abs(a) >= _SPLIT_LIMIT or abs(b) >= _SPLIT_LIMIT or abs(p) >= _SPLIT_LIMIT or abs(p) <= _TINY_LIMIT:
        return _settle_exact(p, Fraction(a) * Fraction(b), mode)
    _, err = _two_prod(a, b)
    return _step(p, err, mode)


def _soft_div(a: float, b: float, mode: Mode) -> float:
    q = _ieee_div(a, b)
    if mode is Mode.NEAREST_EVEN or math.isnan(q) or b == 0.0:
        return q
    if not math.isfinite(a) or not math.isfinite(b):
        return q
    if a == 0.0:
        return q
    if math.isinf(q):
        return _overflowed(q, mode)
    if (
        abs(q) >= _SPLIT_LIMIT
        or abs(b) >= _SPLIT_LIMIT
        or abs(a) >= _SPLIT_LIMIT
        or abs(q) <= _TINY_LIMIT
        or abs(a) <= _TINY_LIMIT
    ):
        return _settle_exact(q, Fraction(a) / Fraction(b), mode)
    p, e = _two_prod(q, b)
    residual = (a - p) - e
    # exact quotient minus q has the sign of residual / b
    return _step(q, residual * math.copysign(1.0, b), mode)


def _soft_sqrt(a: float, mode: Mode) -> float:
    if a < 0.0 or math.isnan(a):
        return math.nan
    r = math.sqrt(a)
    if mode is Mode.NEAREST_EVEN or math.isinf(r) or r == 0.0:
        return r
    diff = Fraction(a) - Fraction(r) * Fraction(r)
    return _step(r, diff, mode)


_SOFTWARE = {
    "add": _soft_add,
    "sub": _soft_sub,
    "mul": _soft_mul,
    "div": _soft_div,
}


# ---------------------------------------------------------------------------
# MPFR backend (gmpy2), emulating binary64 with hardware-style directed modes


class _MPFRBackend:
    def __init__(self) -> None:
        import gmpy2  # deferred: optional dependency

        self._gmpy2 = gmpy2
        self._contexts = {}
        for mode, rnd in (
            (Mode.NEAREST_EVEN, gmpy2.RoundToNearest),
            (_DOWN, gmpy2.RoundDown),
            (_UP, gmpy2.RoundUp),
        ):
            ctx = gmpy2.ieee(64)
            ctx.round = rnd
            self._contexts[mode] = ctx

    def _run(self, fn: Callable, a: float, b: float, mode: Mode) -> float:
        gmpy2 = self._gmpy2
        with gmpy2.context(self._contexts[mode]):
            return float(fn(gmpy2.mpfr(a), gmpy2.mpfr(b)))

    def add(self, a: float, b: float, mode: Mode) -> float:
        return self._run(self._gmpy2.add, a, b, mode)

    def sub(self, a: float, b: float, mode: Mode) -> float:
        return self._run(self._gmpy2.sub, a, b, mode)

    def mul(self, a: float, b: float, mode: Mode) -> float:
        return self._run(self._gmpy2.mul, a, b, mode)

    def div(self, a: float, b: float, mode: Mode) -> float:
        if b == 0.0:
            return _ieee_div(a, b)
        return self._run(self._gmpy2.div, a, b, mode)


_BACKENDS: Dict[str, Dict[str, Callable[[float, float, Mode], float]]] = {
    "software": _SOFTWARE,
}


def _load_mpfr() -> Optional[Dict[str, Callable[[float, float, Mode], float]]]:
    try:
        backend = _MPFRBackend()
    except ImportError:
        return None
    return {"add": backend.add, "sub": backend.sub, "mul": backend.mul, "div": backend.div}


def available_backends() -> List[str]:
    """Names of the usable backends, software first."""
    names = ["software"]
    if "mpfr" in _BACKENDS or _register_mpfr():
        names.append("mpfr")
    return names


def _register_mpfr() -> bool:
    table = _load_mpfr()
    if table is None:
        return False
    _BACKENDS["mpfr"] = table
    return True


# ---------------------------------------------------------------------------
# per-thread mode stack


class _ThreadState(threading.local):
    def __init__(self) -> None:
        self.modes: List[Mode] = [Mode.NEAREST_EVEN]
        self.backend: str = "software"


_state = _ThreadState()


def current_mode() -> Mode:
    """Rounding mode at the top of this thread's stack."""
    return _state.modes[-1]


def set_backend(name: str) -> None:
    """Select the rounding backend for the calling thread."""
    if name not in _BACKENDS and not (name == "mpfr" and _register_mpfr()):
        raise ValueError(f"unknown or unavailable rounding backend: {name!r}")
    _state.backend = name


def get_backend() -> str:
    return _state.backend


class RoundingContext:
    """Scoped rounding mode with stack discipline.

    Entering pushes ``mode`` on the calling thread's stack and leaving pops
    it, so nested contexts restore their predecessor::

        with RoundingContext(Mode.TOWARD_POS_INF):
            hi = rounding.add(a, b)
    """

    def __init__(self, mode: Mode) -> None:
        self.mode = mode

    def __enter__(self) -> "RoundingContext":
        _state.modes.append(self.mode)
        return self

    def __exit__(self, *exc) -> None:
        _state.modes.pop()

    # explicit push/pop for callers that cannot use ``with``
    @staticmethod
    def push(mode: Mode) -> None:
        _state.modes.append(mode)

    @staticmethod
    def pop() -> Mode:
        if len(_state.modes) == 1:
            raise RuntimeError("rounding mode stack underflow")
        return _state.modes.pop()


def _dispatch(op: str, a: float, b: float, mode: Mode) -> float:
    return _BACKENDS[_state.backend][op](a, b, mode)


# Mode-following operations: round per the current context.


def add(a: float, b: float) -> float:
    return _dispatch("add", a, b, current_mode())


def sub(a: float, b: float) -> float:
    return _dispatch("sub", a, b, current_mode())


def mul(a: float, b: float) -> float:
    return _dispatch("mul", a, b, current_mode())


def div(a: float, b: float) -> float:
    return _dispatch("div", a, b, current_mode())


# Fixed-direction operations.  The software backend is called directly on the
# hot path; other backends go through the dispatch table.


def add_down(a: float, b: float) -> float:
    if _state.backend == "software":
        return _soft_add(a, b, _DOWN)
    return _dispatch("add", a, b, _DOWN)


def add_up(a: float, b: float) -> float:
    if _state.backend == "software":
        return _soft_add(a, b, _UP)
    return _dispatch("add", a, b, _UP)


def sub_down(a: float, b: float) -> float:
    if _state.backend == "software":
        return _soft_add(a, -b, _DOWN)
    return _dispatch("sub", a, b, _DOWN)


def sub_up(a: float, b: float) -> float:
    if _state.backend == "software":
        return _soft_add(a, -b, _UP)
    return _dispatch("sub", a, b, _UP)


def mul_down(a: float, b: float) -> float:
    if _state.backend == "software":
        return _soft_mul(a, b, _DOWN)
    return _dispatch("mul", a, b, _DOWN)


def mul_up(a: float, b: float) -> float:
    if _state.backend == "software":
        return _soft_mul(a, b, _UP)
    return _dispatch("mul", a, b, _UP)


def div_down(a: float, b: float) -> float:
    if _state.backend == "software":
        return _soft_div(a, b, _DOWN)
    return _dispatch("div", a, b, _DOWN)


def div_up(a: float, b: float) -> float:
    if _state.backend == "software":
        return _soft_div(a, b, _UP)
    return _dispatch("div", a, b, _UP)


def sqrt_down(a: float) -> float:
    return _soft_sqrt(a, _DOWN)


def sqrt_up(a: float) -> float:
    return _soft_sqrt(a, _UP)


def ulp(x: float) -> float:
    """Gap between |x| and the next float away from zero."""
    x = abs(x)
    if math.isinf(x):
        return INF
    return math.nextafter(x, INF) - x


def dot_nearest(pairs) -> Tuple[float, float]:
    """Round-to-nearest value of ``sum(a * b)`` plus a rigorous error bound.

    The sum is enclosed with directed operations; the returned value is the
    enclosure midpoint and the bound covers the distance to either end, so
    ``|exact - value| <= bound``.  Exactly representable sums give bound 0.
    """
    lo = hi = 0.0
    for a, b in pairs:
        if a == 0.0 or b == 0.0:
            continue
        lo = _soft_add(lo, _soft_mul(a, b, _DOWN), _DOWN)
        hi = _soft_add(hi, _soft_mul(a, b, _UP), _UP)
    if lo == hi:
        return lo, 0.0
    if math.isinf(lo) or math.isinf(hi):
        return 0.5 * lo + 0.5 * hi, INF
    value = 0.5 * lo + 0.5 * hi
    value = min(max(value, lo), hi)
    bound = max(_soft_add(hi, -value, _UP), _soft_add(value, -lo, _UP))
    return value, bound


# ---------------------------------------------------------------------------
# vectorised kernels (numpy), used by the Monte Carlo experiments
#
# The same error-free transformations run elementwise.  Lanes where they are
# not valid (non-finite values, extreme magnitudes) are pushed one unit
# outward unconditionally, which keeps them sound at the price of at most one
# extra unit of width.


def _v_step(value: np.ndarray, err: np.ndarray, safe: np.ndarray, down: bool) -> np.ndarray:
    target = -np.inf if down else np.inf
    if down:
        move = (err < 0) | ~safe
    else:
        move = (err > 0) | ~safe
    moved = np.nextafter(value, target)
    return np.where(move & ~np.isnan(value), moved, value)


def _v_add(a: np.ndarray, b: np.ndarray, down: bool) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        s = a + b
        bb = s - a
        err = (a - (s - bb)) + (b - bb)
    safe = np.isfinite(s)
    err = np.where(safe, err, 0.0)
    return _v_step(s, err, safe, down)


def _v_two_prod(a: np.ndarray, b: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    p = a * b
    ca = _SPLITTER * a
    ah = ca - (ca - a)
    al = a - ah
    cb = _SPLITTER * b
    bh = cb - (cb - b)
    bl = b - bh
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _v_mul(a: np.ndarray, b: np.ndarray, down: bool) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore", under="ignore"):
        p, err = _v_two_prod(a, b)
    exact_zero = (a == 0) | (b == 0)
    safe = (
        np.isfinite(p)
        & (np.abs(a) < _SPLIT_LIMIT)
        & (np.abs(b) < _SPLIT_LIMIT)
        & (np.abs(p) < _SPLIT_LIMIT)
        & ((np.abs(p) > _TINY_LIMIT) | exact_zero)
    )
    err = np.where(safe & ~exact_zero, err, 0.0)
    out = _v_step(p, err, safe, down)
    return np.where(exact_zero & np.isfinite(a) & np.isfinite(b), p, out)


def _v_div(a: np.ndarray, b: np.ndarray, down: bool) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore", under="ignore", divide="ignore"):
        q = a / b
        p, e = _v_two_prod(q, b)
        residual = ((a - p) - e) * np.sign(b)
    exact_zero = (a == 0) & (b != 0) & np.isfinite(b)
    safe = (
        np.isfinite(q)
        & (np.abs(q) < _SPLIT_LIMIT)
        & (np.abs(b) < _SPLIT_LIMIT)
        & (np.abs(a) < _SPLIT_LIMIT)
        & ((np.abs(q) > _TINY_LIMIT) | exact_zero)
        & ((np.abs(a) > _TINY_LIMIT) | exact_zero)
    )
    residual = np.where(safe & ~exact_zero, residual, 0.0)
    out = _v_step(q, residual, safe, down)
    return np.where(exact_zero, q, out)


def vadd_down(a, b):
    return _v_add(np.asarray(a, float), np.asarray(b, float), True)


def vadd_up(a, b):
    return _v_add(np.asarray(a, float), np.asarray(b, float), False)


def vsub_down(a, b):
    return _v_add(np.asarray(a, float), -np.asarray(b, float), True)


def vsub_up(a, b):
    return _v_add(np.asarray(a, float), -np.asarray(b, float), False)


def vmul_down(a, b):
    return _v_mul(np.asarray(a, float), np.asarray(b, float), True)


def vmul_up(a, b):
    return _v_mul(np.asarray(a, float), np.asarray(b, float), False)


def vdiv_down(a, b):
    return _v_div(np.asarray(a, float), np.asarray(b, float), True)


def vdiv_up(a, b):
    return _v_div(np.asarray(a, float), np.asarray(b, float), False)


# ---------------------------------------------------------------------------
# conformance tester


@dataclass
class ConformanceReport:
    """Outcome of :func:`conformance_suite`.

    ``failures`` holds ``(op, a, b, down, up)`` tuples for every pair whose
    directed results do not bracket the exact value or are not the tightest
    such floats.  ``max_gap_ulps`` records, per op, the widest observed
    ``up - down`` measured in units of the exact result's ulp.
    """

    pairs: int
    backend: str
    failures: List[Tuple[str, float, float, float, float]] = field(default_factory=list)
    max_gap_ulps: Dict[str, float] = field(default_factory=dict)
    seconds: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.failures


_SPECIAL_OPERANDS = [
    0.0,
    -0.0,
    1.0,
    -1.0,
    0.1,
    -0.1,
    5e-324,
    -5e-324,
    2.2250738585072014e-308,
    1e-310,
    -3e-320,
    MAX_FLOAT,
    -MAX_FLOAT,
    3.0,
    1.0 / 3.0,
]


def _random_double(rng: random.Random, wide: bool) -> float:
    if wide:
        exponent = rng.randint(-1074, 1023)
    else:
        exponent = rng.randint(-30, 30)
    value = math.ldexp(1.0 + rng.random(), exponent)
    if rng.random() < 0.5:
        value = -value
    return value


def _operand_pairs(n: int, seed: int) -> List[Tuple[float, float]]:
    """Special-value cross product followed by ``n`` random pairs."""
    rng = random.Random(seed)
    pairs = [(a, b) for a in _SPECIAL_OPERANDS for b in _SPECIAL_OPERANDS]
    for _ in range(n):
        wide = rng.random() < 0.5
        a = _random_double(rng, wide)
        roll = rng.random()
        if roll < 0.125:
            # nearby magnitudes exercise cancellation in add/sub
            b = -a * (1.0 + rng.uniform(-1e-3, 1e-3))
        elif roll < 0.25:
            b = a * rng.uniform(0.5, 2.0)
        else:
            b = _random_double(rng, wide)
        if not math.isfinite(b):
            b = a
        pairs.append((a, b))
    return pairs


def _exact(op: str, a: float, b: float) -> Optional[Fraction]:
    fa, fb = Fraction(a), Fraction(b)
    if op == "add":
        return fa + fb
    if op == "sub":
        return fa - fb
    if op == "mul":
        return fa * fb
    if b == 0.0:
        return None
    return fa / fb


def _check_directed(exact: Fraction, down: float, up: float) -> Tuple[bool, float]:
    """Bracketing plus tightness, and the gap in ulps of the exact value."""
    if math.isnan(down) or math.isnan(up):
        return False, INF
    ok = True
    if math.isinf(down):
        ok &= down < 0 and exact < Fraction(-MAX_FLOAT)
    else:
        fd = Fraction(down)
        ok &= fd <= exact
        nxt = math.nextafter(down, INF)
        ok &= math.isinf(nxt) or Fraction(nxt) > exact
    if math.isinf(up):
        ok &= up > 0 and exact > Fraction(MAX_FLOAT)
    else:
        fu = Fraction(up)
        ok &= fu >= exact
        prv = math.nextafter(up, -INF)
        ok &= math.isinf(prv) or Fraction(prv) < exact
    if math.isinf(down) or math.isinf(up):
        return ok, 0.0
    unit = ulp(float(exact)) if exact != 0 else 5e-324
    return ok, (up - down) / unit if unit > 0 else 0.0


def conformance_suite(n: int = 100_000, seed: int = 0, backend: Optional[str] = None) -> ConformanceReport:
    """Check every directed op against exact rational arithmetic.

    Runs ``n`` operand pairs (a fixed block of special values followed by
    log-uniformly distributed doubles) through add/sub/mul/div in both
    directions and compares with :class:`fractions.Fraction` results.
    """
    previous = _state.backend
    if backend is not None:
        set_backend(backend)
    start = time.perf_counter()
    name = _state.backend
    report = ConformanceReport(pairs=0, backend=name)
    ops = {
        "add": (add_down, add_up),
        "sub": (sub_down, sub_up),
        "mul": (mul_down, mul_up),
        "div": (div_down, div_up),
    }
    try:
        pairs = _operand_pairs(n, seed)
        report.pairs = len(pairs)
        for op, (fdown, fup) in ops.items():
            worst = 0.0
            for a, b in pairs:
                exact = _exact(op, a, b)
                if exact is None:
                    continue
                down, up = fdown(a, b), fup(a, b)
                ok, gap = _check_directed(exact, down, up)
                if not ok:
                    report.failures.append((op, a, b, down, up))
                elif gap > worst:
                    worst = gap
            report.max_gap_ulps[op] = worst
    finally:
        _state.backend = previous
    report.seconds = time.perf_counter() - start
    return report
