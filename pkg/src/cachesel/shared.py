"""Shared-cache single-pass simulation and selection.

The shared cache sees the sequentialized private misses and needs no
coherence, so this is the private-level engine run with one processor.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .engine import SinglePassSimulator, counters
from .errors import EmptySpace, NoFeasibleShared
from .space import CacheConfig, DesignSpace, enumerate_space


@dataclass
class SharedSimResult:
    space: DesignSpace
    misses: np.ndarray          # [level, assoc_index]
    excluded: np.ndarray
    excluded_at: np.ndarray
    miss_limit: Optional[int]
    private: CacheConfig
    trace_digest: str
    secondary_digest: str

    def configs(self):
        return enumerate_space(self.space)

    def tam_double_prime(self, config: CacheConfig) -> int:
        L, a = self.space.index(config)
        return int(self.misses[L, a])

    def is_excluded(self, config: CacheConfig) -> bool:
        return bool(self.excluded[self.space.index(config)[0]])

    def tallies(self):
        excl = int(self.excluded.sum()) * len(self.space.assocs)
        return len(self.space) - excl, excl

    def csv_rows(self):
        for L, s in enumerate(self.space.set_sizes):
            for a, assoc in enumerate(self.space.assocs):
                yield s, assoc, int(self.misses[L, a]), int(self.excluded[L])

    def to_dict(self):
        return {"space": self.space.to_dict(), "misses": self.misses.tolist(),
                "excluded": self.excluded.tolist(), "excluded_at": self.excluded_at.tolist(),
                "miss_limit": self.miss_limit,
                "private": [self.private.sets, self.private.assoc, self.private.block_bytes],
                "trace_digest": self.trace_digest, "secondary_digest": self.secondary_digest}

    @classmethod
    def from_dict(cls, d):
        return cls(DesignSpace.from_dict(d["space"]),
                   np.array(d["misses"], dtype=np.int64).reshape(
                       len(d["space"]["sets"]), len(d["space"]["assocs"])),
                   np.array(d["excluded"], dtype=np.bool_),
                   np.array(d["excluded_at"], dtype=np.int64),
                   d["miss_limit"], CacheConfig(*d["private"]),
                   d["trace_digest"], d["secondary_digest"])


def simulate_shared(secondary, space: DesignSpace, tam_limit_prime=None) -> SharedSimResult:
    """Evaluate every shared configuration in one read of ``secondary``."""
    if space is None or len(space) == 0:
        raise EmptySpace("shared design space is empty")
    counters.shared_runs += 1
    sim = SinglePassSimulator(space, 1, miss_limit=tam_limit_prime)
    for _, _, blocks, _ in secondary.iter_chunks():
        if len(blocks):
            n = len(blocks)
            sim.feed(blocks, np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.bool_))
    t = sim.tree
    return SharedSimResult(space, t.misses[:, :, 0].copy(), t.excluded.copy(),
                           t.excluded_at.copy(), tam_limit_prime, secondary.private,
                           secondary.trace_digest, secondary.digest())


def select_shared(result: SharedSimResult, tam_limit_prime) -> CacheConfig:
    """Among configs within the memory-access budget, take the one with most misses.

    Most misses still meeting the budget means least capacity wasted. Ties go
    to the smaller capacity, then the smaller associativity.
    """
    best = None
    for cfg in result.configs():
        if result.is_excluded(cfg):
            continue
        tam = result.tam_double_prime(cfg)
        if tam > tam_limit_prime:
            continue
        key = (-tam, cfg.capacity, cfg.assoc)
        if best is None or key < best[0]:
            best = (key, cfg)
    if best is None:
        raise NoFeasibleShared(
            f"every shared configuration exceeds {tam_limit_prime} memory accesses "
            f"behind private {result.private.label}")
    return best[1]
