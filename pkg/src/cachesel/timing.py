"""Data-memory-operation time model.

Total time is the private-level sequential accesses times the private latency,
plus shared-level accesses times the shared latency, plus memory accesses
times the memory latency. Everything is integer nanoseconds.
"""

import re
from dataclasses import dataclass
from decimal import Decimal, InvalidOperation
from typing import Optional

from .errors import InvalidConfig


@dataclass(frozen=True)
class TimingParams:
    tp: int = 1
    ts: int = 4
    tm: int = 15

    def __post_init__(self):
        if not (0 < self.tp <= self.ts <= self.tm):
            raise InvalidConfig(
                f"latencies must satisfy 0 < tp <= ts <= tm, got {self.tp}/{self.ts}/{self.tm}")


@dataclass(frozen=True)
class AccessCounts:
    tap: int
    tas: int
    tam: int

    def __post_init__(self):
        if min(self.tap, self.tas, self.tam) < 0:
            raise ValueError(f"negative access count in {self}")
        if self.tam > self.tas:
            raise ValueError(f"memory accesses ({self.tam}) exceed shared accesses ({self.tas})")

    def __add__(self, other):
        return AccessCounts(self.tap + other.tap, self.tas + other.tas, self.tam + other.tam)


@dataclass(frozen=True)
class Deadline:
    wcdmot: int

    def __post_init__(self):
        if self.wcdmot < 0:
            raise InvalidConfig(f"deadline must be >= 0 ns, got {self.wcdmot}")


def amt(counts: AccessCounts, params: TimingParams) -> int:
    return counts.tap * params.tp + counts.tas * params.ts + counts.tam * params.tm


def feasible(counts: AccessCounts, params: TimingParams, deadline: Deadline) -> bool:
    return amt(counts, params) <= deadline.wcdmot


def max_tam(tap, tas, params: TimingParams, deadline: Deadline) -> Optional[int]:
    """Largest memory-access count that still meets the deadline, or None."""
    slack = deadline.wcdmot - tap * params.tp - tas * params.ts
    if slack < 0:
        return None
    return slack // params.tm


_UNITS = {"s": 10**9, "ms": 10**6, "us": 10**3, "ns": 1}
_DURATION = re.compile(r"^\s*([0-9]*\.?[0-9]+(?:[eE][-+]?[0-9]+)?)\s*(s|ms|us|ns)?\s*$")


def parse_duration(text) -> int:
    """``"1.0s"``, ``"250ms"``, ``"40us"``, ``"123ns"`` -> integer ns.

    A bare number is taken as seconds. Fractional nanoseconds are rejected.
    """
    m = _DURATION.match(str(text))
    if not m:
        raise InvalidConfig(f"bad duration {text!r}; use a number with s|ms|us|ns")
    try:
        value = Decimal(m.group(1)) * _UNITS[m.group(2) or "s"]
    except InvalidOperation:
        raise InvalidConfig(f"bad duration {text!r}") from None
    if value != value.to_integral_value():
        raise InvalidConfig(f"duration {text!r} is not a whole number of nanoseconds")
    return int(value)
