"""Interval linear systems: Gaussian elimination in any of the arithmetics.

Entries can be tied together.  A ``shared`` tag makes several entries the
same uncertain quantity; ``negShared`` makes an entry its negation (so a
symmetric matrix ties ``A[i][j]`` and ``A[j][i]`` with ``shared`` and a
skew-symmetric one uses ``shared`` plus ``negShared``).  Classical interval
arithmetic cannot express these ties and ignores them; affine and
functional-boundary arithmetic map every tie group to one parameter.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

from . import affine as af
from . import classical as cl
from . import fbia as fb
from ._registry import ParamRegistry
from .classical import Box, Interval

__all__ = [
    "DependencyTag",
    "IntervalLinearSystem",
    "Enclosure",
    "ZeroPivot",
    "SingularRealization",
    "SystemInputError",
    "gauss_solve",
    "corner_hull_oracle",
    "load_system",
    "parse_system",
    "benchmark_system",
]

RHS = "b"
INDEPENDENT, SHARED, NEG_SHARED = "independent", "shared", "negShared"


class ZeroPivot(cl.IntervalError):
    """Elimination met a pivot whose range contains zero."""

    def __init__(self, row: int):
        super().__init__(f"pivot in column {row} contains zero")
        self.row = row


class SingularRealization(cl.IntervalError):
    """A point realization of the system is singular."""


class SystemInputError(ValueError):
    """Malformed system description."""


@dataclass(frozen=True)
class DependencyTag:
    kind: str = INDEPENDENT
    group: Optional[str] = None

    def __post_init__(self) -> None:
        if self.kind not in (INDEPENDENT, SHARED, NEG_SHARED):
            raise SystemInputError(f"unknown dependency kind {self.kind!r}")
        if self.kind != INDEPENDENT and self.group is None:
            raise SystemInputError(f"{self.kind} tag needs a group")


_FREE = DependencyTag()
Position = Tuple[int, Union[int, str]]


@dataclass
class IntervalLinearSystem:
    """``A x = b`` with interval data and optional dependency tags.

    Tags are keyed by ``(i, j)`` for matrix entries and ``(i, "b")`` for the
    right-hand side; untagged entries are independent.
    """

    A: List[List[Interval]]
    b: List[Interval]
    tags: Dict[Position, DependencyTag] = field(default_factory=dict)

    def __post_init__(self) -> None:
        n = len(self.A)
        if n < 1 or any(len(row) != n for row in self.A) or len(self.b) != n:
            raise SystemInputError("system must be square with a matching right-hand side")
        self._check_tags()

    @property
    def n(self) -> int:
        return len(self.A)

    def entry(self, pos: Position) -> Interval:
        i, j = pos
        return self.b[i] if j == RHS else self.A[i][j]

    def tag(self, pos: Position) -> DependencyTag:
        return self.tags.get(pos, _FREE)

    def positions(self) -> List[Position]:
        pos: List[Position] = [(i, j) for i in range(self.n) for j in range(self.n)]
        return pos + [(i, RHS) for i in range(self.n)]

    def groups(self) -> Dict[str, List[Position]]:
        out: Dict[str, List[Position]] = {}
        for pos in self.positions():
            t = self.tag(pos)
            if t.kind != INDEPENDENT:
                out.setdefault(t.group, []).append(pos)
        return out

    def _check_tags(self) -> None:
        for pos in self.tags:
            i, j = pos
            if not (0 <= i < self.n and (j == RHS or 0 <= j < self.n)):
                raise SystemInputError(f"tag position {pos} outside the system")
        for group, members in self.groups().items():
            base = self._group_base(group, members)
            for pos in members:
                iv = self.entry(pos)
                want = base if self.tag(pos).kind == SHARED else cl.neg(base)
                if (iv.lo, iv.hi) != (want.lo, want.hi):
                    raise SystemInputError(f"entry {pos} interval inconsistent with group {group!r}")
            for i, j in members:
                if j != RHS and i != j and self.tag((j, i)).group != group:
                    raise SystemInputError(f"group {group!r}: entry ({i},{j}) tied but ({j},{i}) is not")

    def _group_base(self, group: str, members: Sequence[Position]) -> Interval:
        for pos in members:
            if self.tag(pos).kind == SHARED:
                return self.entry(pos)
        return cl.neg(self.entry(members[0]))


@dataclass
class Enclosure:
    x: Box
    method: str
    exact: Optional[List[Tuple[Fraction, Fraction]]] = None


# ---------------------------------------------------------------------------
# arithmetic adapters


class _Classical:
    name = "classical"

    def __init__(self, system: IntervalLinearSystem):
        self.system = system

    def value(self, pos: Position):
        return self.system.entry(pos)

    sub = staticmethod(cl.sub)
    mul = staticmethod(cl.mul)
    div = staticmethod(cl.div)

    @staticmethod
    def to_interval(v) -> Interval:
        return v


class _Parametric:
    """Shared bookkeeping: one parameter per free entry or tie group."""

    def __init__(self, system: IntervalLinearSystem):
        self.system = system
        self.registry = ParamRegistry()
        self._group_param: Dict[str, int] = {}
        self._cache: Dict[Position, object] = {}
        for pos in system.positions():
            self._cache[pos] = self._materialize(pos)

    def _materialize(self, pos: Position):
        iv = self.system.entry(pos)
        tag = self.system.tag(pos)
        if tag.kind == INDEPENDENT:
            if iv.lo == iv.hi:
                return self.constant(iv.lo)
            return self.parameter(self.registry.register(iv, self._name(pos)), iv)
        group = tag.group
        if group not in self._group_param:
            base = self.system._group_base(group, self.system.groups()[group])
            self._group_param[group] = self.registry.register(base, f"g[{group}]")
        pid = self._group_param[group]
        base = self.registry[pid].original
        value = self.parameter(pid, base)
        return value if tag.kind == SHARED else self.negate(value)

    @staticmethod
    def _name(pos: Position) -> str:
        i, j = pos
        return f"b{i + 1}" if j == RHS else f"a{i + 1}{j + 1}"

    def value(self, pos: Position):
        return self._cache[pos]


class _Affine(_Parametric):
    name = "affine"

    def constant(self, v: float):
        return af.constant(v)

    def parameter(self, pid: int, iv: Interval):
        return af.from_interval(iv, pid)

    negate = staticmethod(af.neg)
    sub = staticmethod(af.sub)

    @staticmethod
    def mul(x, y):
        return af.mul(x, y, remainder="diagonal")

    @staticmethod
    def div(x, d, d_range: Optional[Interval] = None):
        # no affine division: the divisor is collapsed to its range
        return af.div_by_interval(x, af.to_interval(d) if d_range is None else d_range, remainder="diagonal")

    to_interval = staticmethod(af.to_interval)


class _FB(_Parametric):
    name = "fb"

    def constant(self, v: float):
        return fb.constant(v)

    def parameter(self, pid: int, iv: Interval):
        return fb.embed_param(pid, self.registry)

    negate = staticmethod(fb.neg)
    sub = staticmethod(fb.sub)
    mul = staticmethod(fb.mul)

    @staticmethod
    def div(x, d, d_range: Optional[Interval] = None):
        return fb.div(x, d)

    to_interval = staticmethod(fb.to_interval)


@dataclass(frozen=True)
class _Pair:
    value: object
    shadow: Interval


class _Shadowed:
    """Runs a parametric arithmetic alongside classical intervals.

    Every quantity carries its form and an interval, refined after each
    operation to the intersection of the classical result and the form's
    own range.  That interval is what pivot selection, the collapsed affine
    divisor and the reported hull use.  Both components are enclosures on
    their own, so the pair is too.
    """

    def __init__(self, inner: _Parametric):
        self.inner = inner
        self.name = inner.name

    def _pair(self, value, shadow: Interval) -> _Pair:
        both = cl.intersect(self.inner.to_interval(value), shadow)
        return _Pair(value, shadow if both is cl.EMPTY else both)

    def value(self, pos: Position) -> _Pair:
        return self._pair(self.inner.value(pos), self.inner.system.entry(pos))

    @staticmethod
    def to_interval(x: _Pair) -> Interval:
        return x.shadow

    def sub(self, x: _Pair, y: _Pair) -> _Pair:
        return self._pair(self.inner.sub(x.value, y.value), cl.sub(x.shadow, y.shadow))

    def mul(self, x: _Pair, y: _Pair) -> _Pair:
        return self._pair(self.inner.mul(x.value, y.value), cl.mul(x.shadow, y.shadow))

    def div(self, x: _Pair, d: _Pair) -> _Pair:
        return self._pair(self.inner.div(x.value, d.value, d.shadow), cl.div(x.shadow, d.shadow))


_ARITHMETICS = {"classical": _Classical, "affine": _Affine, "fb": _FB}


# ---------------------------------------------------------------------------
# elimination


def gauss_solve(
    system: IntervalLinearSystem,
    arithmetic: str = "classical",
    pivoting: bool = True,
    shadow: bool = True,
) -> Enclosure:
    """Forward elimination and back substitution in the chosen arithmetic.

    Rows are exchanged to put the candidate of largest mignitude on the
    diagonal.  Raises :class:`ZeroPivot` when every candidate pivot range
    contains zero.

    With ``shadow`` (the default) the affine and functional-boundary runs
    also carry classical intervals, and every range is the intersection of
    the two enclosures.  ``shadow=False`` reports the pure arithmetic.
    """
    try:
        ar = _ARITHMETICS[arithmetic](system)
    except KeyError:
        raise SystemInputError(f"unknown arithmetic {arithmetic!r}") from None
    if shadow and isinstance(ar, _Parametric):
        ar = _Shadowed(ar)
    n = system.n
    A = [[ar.value((i, j)) for j in range(n)] for i in range(n)]
    b = [ar.value((i, RHS)) for i in range(n)]
    for k in range(n):
        if pivoting:
            p = max(range(k, n), key=lambda i: cl.mignitude(ar.to_interval(A[i][k])))
            A[k], A[p] = A[p], A[k]
            b[k], b[p] = b[p], b[k]
        if cl.is_zero_containing(ar.to_interval(A[k][k])):
            raise ZeroPivot(k)
        for i in range(k + 1, n):
            m = ar.div(A[i][k], A[k][k])
            for j in range(k + 1, n):
                A[i][j] = ar.sub(A[i][j], ar.mul(m, A[k][j]))
            b[i] = ar.sub(b[i], ar.mul(m, b[k]))
    x: List[object] = [None] * n
    for i in reversed(range(n)):
        s = b[i]
        for j in range(i + 1, n):
            s = ar.sub(s, ar.mul(A[i][j], x[j]))
        x[i] = ar.div(s, A[i][i])
    return Enclosure(Box(ar.to_interval(v) for v in x), arithmetic if ar.name == arithmetic and not isinstance(ar, _Shadowed) else f"{arithmetic}+interval")


# ---------------------------------------------------------------------------
# corner oracle


def _solve_exact(A: List[List[Fraction]], b: List[Fraction]) -> List[Fraction]:
    n = len(A)
    M = [row[:] + [rhs] for row, rhs in zip(A, b)]
    for k in range(n):
        p = next((i for i in range(k, n) if M[i][k] != 0), None)
        if p is None:
            raise SingularRealization("point realization is singular")
        M[k], M[p] = M[p], M[k]
        for i in range(k + 1, n):
            f = M[i][k] / M[k][k]
            if f:
                for j in range(k, n + 1):
                    M[i][j] -= f * M[k][j]
    x = [Fraction(0)] * n
    for i in reversed(range(n)):
        s = M[i][n] - sum(M[i][j] * x[j] for j in range(i + 1, n))
        x[i] = s / M[i][i]
    return x


def corner_hull_oracle(system: IntervalLinearSystem) -> Enclosure:
    """Hull of the exact solutions over all endpoint realizations.

    Tied entries move together (negated for ``negShared``).  Solutions are
    computed in exact rational arithmetic; the reported floats are the
    nearest doubles and ``exact`` keeps the rational hull.
    """
    n = system.n
    sources: List[Tuple[str, object]] = []
    seen_groups = set()
    for pos in system.positions():
        tag = system.tag(pos)
        iv = system.entry(pos)
        if tag.kind == INDEPENDENT:
            if iv.lo != iv.hi:
                sources.append(("pos", pos))
        elif tag.group not in seen_groups:
            seen_groups.add(tag.group)
            sources.append(("group", tag.group))
    if len(sources) > 20:
        raise SystemInputError(f"{len(sources)} free sources: corner enumeration too large")
    groups = system.groups()
    bases = {g: system._group_base(g, members) for g, members in groups.items()}
    lo: List[Optional[Fraction]] = [None] * n
    hi: List[Optional[Fraction]] = [None] * n
    for choice in itertools.product((0, 1), repeat=len(sources)):
        picked: Dict[Position, Fraction] = {}
        group_pick: Dict[str, int] = {}
        for (kind, key), c in zip(sources, choice):
            if kind == "pos":
                iv = system.entry(key)
                picked[key] = Fraction(iv.hi if c else iv.lo)
            else:
                group_pick[key] = c
        for pos in system.positions():
            if pos in picked:
                continue
            tag = system.tag(pos)
            if tag.kind == INDEPENDENT:
                picked[pos] = Fraction(system.entry(pos).lo)
            else:
                base = bases[tag.group]
                v = Fraction(base.hi if group_pick[tag.group] else base.lo)
                picked[pos] = v if tag.kind == SHARED else -v
        A = [[picked[(i, j)] for j in range(n)] for i in range(n)]
        b = [picked[(i, RHS)] for i in range(n)]
        x = _solve_exact(A, b)
        for i, v in enumerate(x):
            lo[i] = v if lo[i] is None or v < lo[i] else lo[i]
            hi[i] = v if hi[i] is None or v > hi[i] else hi[i]
    exact = list(zip(lo, hi))
    box = Box(Interval(float(a), float(b)) for a, b in exact)
    return Enclosure(box, "corner-oracle", exact)


# ---------------------------------------------------------------------------
# input


def parse_system(data: dict) -> IntervalLinearSystem:
    """Build a system from the JSON-like description.

    Keys: ``n``; ``A`` as a row-major list of ``[lo, hi]`` pairs (flat or
    nested); ``b`` as a list of pairs; optional ``tags`` as a list of
    ``[i, j, kind, group]`` with ``j = "b"`` addressing the right-hand side.
    """
    try:
        n = int(data["n"])
        flat = data["A"]
        if flat and isinstance(flat[0], list) and flat[0] and isinstance(flat[0][0], list):
            flat = [e for row in flat for e in row]
        if len(flat) != n * n:
            raise SystemInputError(f"expected {n * n} matrix entries, got {len(flat)}")
        A = [[Interval(*map(float, flat[i * n + j])) for j in range(n)] for i in range(n)]
        b = [Interval(*map(float, e)) for e in data["b"]]
        tags: Dict[Position, DependencyTag] = {}
        for item in data.get("tags", []):
            i, j, kind, group = item
            key = (int(i), RHS if j == RHS else int(j))
            tags[key] = DependencyTag(kind, None if group is None else str(group))
    except SystemInputError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise SystemInputError(f"malformed system description: {exc}") from exc
    return IntervalLinearSystem(A, b, tags)


def load_system(path: str) -> IntervalLinearSystem:
    with open(path, encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise SystemInputError(f"{path}: {exc}") from exc
    return parse_system(data)


def benchmark_system(dependency: str = "independent") -> IntervalLinearSystem:
    """The 3x3 benchmark: diagonal [0.7, 1.3], off-diagonal [-0.3, 0.3].

    ``dependency`` is ``"independent"``, ``"symmetric"`` or ``"skew"``; the
    latter two tie each off-diagonal pair.
    """
    n = 3
    A = [[Interval(0.7, 1.3) if i == j else Interval(-0.3, 0.3) for j in range(n)] for i in range(n)]
    b = [Interval(-14, -7), Interval(9, 12), Interval(-3, 3)]
    tags: Dict[Position, DependencyTag] = {}
    if dependency in ("symmetric", "skew"):
        for i in range(n):
            for j in range(i + 1, n):
                group = f"a{i + 1}{j + 1}"
                tags[(i, j)] = DependencyTag(SHARED, group)
                tags[(j, i)] = DependencyTag(SHARED if dependency == "symmetric" else NEG_SHARED, group)
    elif dependency != "independent":
        raise SystemInputError(f"unknown dependency pattern {dependency!r}")
    return IntervalLinearSystem(A, b, tags)
