"""Shared universe of uncertain parameters.

Every parameter lives on the canonical range [-1, 1]; a user interval
``[lo, hi]`` is reached through ``mid + x * rad``.  The same identifiers name
affine noise symbols, so one registry can serve both arithmetics.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional

from . import rounding as rd
from .classical import Interval, IntervalError

ParamId = int


@dataclass(frozen=True)
class ParamInfo:
    pid: ParamId
    name: str
    original: Optional[Interval]
    mid: float
    rad: float


class ParamRegistry:
    """Issues parameter ids and keeps their rescaling constants.

    ``rad`` is rounded so that ``[mid - rad, mid + rad]`` always contains the
    registered interval; callers that need the exact user interval should
    read ``original``.
    """

    def __init__(self) -> None:
        self._params: List[ParamInfo] = []
        self._by_name: Dict[str, ParamId] = {}

    def __len__(self) -> int:
        return len(self._params)

    def __iter__(self) -> Iterator[ParamInfo]:
        return iter(self._params)

    def __getitem__(self, pid: ParamId) -> ParamInfo:
        return self._params[pid]

    def register(self, interval: Optional[Interval] = None, name: Optional[str] = None) -> ParamId:
        """Add a parameter; without an interval it is a bare noise symbol."""
        pid = len(self._params)
        if name is None:
            name = f"x{pid + 1}"
        if name in self._by_name:
            raise IntervalError(f"parameter name {name!r} already registered")
        if interval is None:
            mid, rad = 0.0, 1.0
        else:
            if not interval.is_finite:
                raise IntervalError("parameters need a bounded interval")
            mid = 0.5 * interval.lo + 0.5 * interval.hi
            rad = max(rd.sub_up(interval.hi, mid), rd.sub_up(mid, interval.lo))
        self._params.append(ParamInfo(pid, name, interval, mid, rad))
        self._by_name[name] = pid
        return pid

    def fresh(self, name: Optional[str] = None) -> ParamId:
        return self.register(None, name)

    def lookup(self, name: str) -> ParamId:
        return self._by_name[name]

    def name(self, pid: ParamId) -> str:
        return self._params[pid].name

    def to_canonical(self, pid: ParamId, value: float) -> float:
        info = self._params[pid]
        return 0.0 if info.rad == 0.0 else (value - info.mid) / info.rad

    def from_canonical(self, pid: ParamId, x: float) -> float:
        info = self._params[pid]
        return info.mid + x * info.rad
