"""Private-level single-pass simulation, selection and secondary-trace emission."""

from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .budget import PerfBudget
from .engine import SinglePassSimulator, counters
from .errors import EmptySpace, NoFeasiblePrivate, ProcessorMismatch
from .space import CacheConfig, DesignSpace, enumerate_space
from .timing import Deadline, TimingParams, max_tam
from .trace import block_of, new_trace_hasher, record_bytes


@dataclass
class PrivateSimResult:
    """Miss counts of every private-level configuration.

    ``misses[level, assoc_index, proc]`` is exact for configurations whose
    level is not excluded, and a lower bound (already above ``tas_limit``)
    for excluded ones.
    """

    space: DesignSpace
    processor_count: int
    misses: np.ndarray
    excluded: np.ndarray
    excluded_at: np.ndarray
    tas_limit: Optional[int]
    tap_observed: int
    trace_digest: str

    def configs(self):
        return enumerate_space(self.space)

    def per_processor(self, config: CacheConfig) -> Tuple[int, ...]:
        L, a = self.space.index(config)
        return tuple(int(m) for m in self.misses[L, a])

    def tas_prime(self, config: CacheConfig) -> int:
        L, a = self.space.index(config)
        return int(self.misses[L, a].sum())

    def is_excluded(self, config: CacheConfig) -> bool:
        return bool(self.excluded[self.space.index(config)[0]])

    def tallies(self):
        """(simulated, excluded) configuration counts."""
        nA = len(self.space.assocs)
        excl = int(self.excluded.sum()) * nA
        return len(self.space) - excl, excl

    def csv_rows(self):
        for L, s in enumerate(self.space.set_sizes):
            for a, assoc in enumerate(self.space.assocs):
                for p in range(self.processor_count):
                    yield s, assoc, p, int(self.misses[L, a, p]), int(self.excluded[L])

    def to_dict(self):
        return {"space": self.space.to_dict(), "processor_count": self.processor_count,
                "misses": self.misses.tolist(), "excluded": self.excluded.tolist(),
                "excluded_at": self.excluded_at.tolist(), "tas_limit": self.tas_limit,
                "tap_observed": self.tap_observed, "trace_digest": self.trace_digest}

    @classmethod
    def from_dict(cls, d):
        return cls(DesignSpace.from_dict(d["space"]), d["processor_count"],
                   np.array(d["misses"], dtype=np.int64).reshape(
                       len(d["space"]["sets"]), len(d["space"]["assocs"]), d["processor_count"]),
                   np.array(d["excluded"], dtype=np.bool_),
                   np.array(d["excluded_at"], dtype=np.int64),
                   d["tas_limit"], d["tap_observed"], d["trace_digest"])


def _check_inputs(trace, space, processor_count):
    if space is None or len(space) == 0:
        raise EmptySpace("private design space is empty")
    if processor_count is None:
        processor_count = trace.processor_count
    if processor_count != trace.processor_count:
        raise ProcessorMismatch(
            f"trace has {trace.processor_count} processors, caller asked for {processor_count}")
    return processor_count


def simulate_private(trace, space: DesignSpace, processor_count=None,
                     tas_limit=None) -> PrivateSimResult:
    """Evaluate every private configuration in one read of ``trace``.

    ``trace`` is anything with ``processor_count`` and ``iter_chunks()``.
    TAP (distinct access cycles) and the trace digest are collected during
    the same pass.
    """
    P = _check_inputs(trace, space, processor_count)
    counters.private_runs += 1
    sim = SinglePassSimulator(space, P, miss_limit=tas_limit)
    hasher = new_trace_hasher(P)
    tap = 0
    last_cycle = None
    for cycles, procs, writes, addrs, _ in trace.iter_chunks():
        if len(cycles) == 0:
            continue
        hasher.update(record_bytes(cycles, procs, writes, addrs))
        tap += int(np.count_nonzero(np.diff(cycles))) + (cycles[0] != last_cycle)
        last_cycle = cycles[-1]
        sim.feed(block_of(addrs, space.block_bytes), procs, writes)
    t = sim.tree
    return PrivateSimResult(space, P, t.misses.copy(), t.excluded.copy(),
                            t.excluded_at.copy(), tas_limit, int(tap), hasher.hexdigest())


def select_private(result: PrivateSimResult, budget: PerfBudget, params: TimingParams,
                   deadline: Deadline) -> Tuple[CacheConfig, int]:
    """Pick the private configuration leaving the most memory accesses to spare.

    Returns ``(config, tam_prime)``. Ties go to the smaller capacity, then
    the smaller associativity.
    """
    best = None
    for cfg in result.configs():
        if result.is_excluded(cfg):
            continue
        tam_prime = max_tam(result.tap_observed, result.tas_prime(cfg), params, deadline)
        if tam_prime is None or tam_prime > budget.tam_limit:
            continue
        key = (-tam_prime, cfg.capacity, cfg.assoc)
        if best is None or key < best[0]:
            best = (key, cfg, tam_prime)
    if best is None:
        raise NoFeasiblePrivate(
            f"no private configuration leaves a memory-access budget under "
            f"{deadline.wcdmot} ns")
    return best[1], best[2]


class SecondaryTrace:
    """Sequentialized private-level misses, ordered by (cycle, processor)."""

    def __init__(self, cycles, procs, blocks, private: CacheConfig, trace_digest):
        self.cycles = np.asarray(cycles, dtype=np.int64)
        self.procs = np.asarray(procs, dtype=np.int64)
        self.blocks = np.asarray(blocks, dtype=np.int64)
        for arr in (self.cycles, self.procs, self.blocks):
            arr.setflags(write=False)
        self.private = private
        self.trace_digest = trace_digest
        self.processor_count = 1

    def __len__(self):
        return len(self.blocks)

    def __iter__(self):
        return zip(self.cycles.tolist(), self.procs.tolist(), self.blocks.tolist())

    def __eq__(self, other):
        if not isinstance(other, SecondaryTrace):
            return NotImplemented
        return (np.array_equal(self.cycles, other.cycles)
                and np.array_equal(self.procs, other.procs)
                and np.array_equal(self.blocks, other.blocks))

    __hash__ = None

    def iter_chunks(self, size=1 << 16):
        for start in range(0, len(self), size):
            stop = start + size
            yield self.cycles[start:stop], self.procs[start:stop], self.blocks[start:stop], start

    def digest(self):
        h = new_trace_hasher(0)
        h.update(f"secondary {self.private.label} B={self.private.block_bytes} "
                 f"from {self.trace_digest}\n".encode())
        mat = np.stack([self.cycles, self.procs, self.blocks], axis=1).astype("<i8")
        h.update(mat.tobytes())
        return h.hexdigest()


def emit_secondary_trace(trace, chosen: CacheConfig, processor_count=None) -> SecondaryTrace:
    """Re-simulate ``chosen`` alone and list its misses as shared-level accesses.

    Every miss (read or write, write-allocate) becomes one access.
    """
    space = DesignSpace((chosen.sets,), (chosen.assoc,), chosen.block_bytes)
    P = _check_inputs(trace, space, processor_count)
    counters.secondary_emits += 1
    sim = SinglePassSimulator(space, P, track=(0, 0))
    hasher = new_trace_hasher(P)
    parts = []
    for cycles, procs, writes, addrs, _ in trace.iter_chunks():
        if len(cycles) == 0:
            continue
        hasher.update(record_bytes(cycles, procs, writes, addrs))
        blocks = block_of(addrs, chosen.block_bytes)
        flags = sim.feed(blocks, procs, writes)
        parts.append((cycles[flags], procs[flags], blocks[flags]))
    if parts:
        cycles, procs, blocks = (np.concatenate(col) for col in zip(*parts))
    else:
        cycles = procs = blocks = np.empty(0, dtype=np.int64)
    order = np.lexsort((procs, cycles))
    return SecondaryTrace(cycles[order], procs[order], blocks[order], chosen, hasher.hexdigest())
