"""Brute-force reference simulation.

Plain per-configuration simulation with Python lists, written independently
of the single-pass engine so the two can be checked against each other.
Rules for the private level:

* read hit: nothing changes (FIFO does not reorder on hits)
* read miss: count a miss, append the block, evicting the oldest if full
* write: as a read, then drop the block from every other processor's cache

The shared cache sees private misses sequentialized by (cycle, processor)
and is a single FIFO cache without coherence.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import groupby
from typing import List, NamedTuple, Optional, Tuple

from .space import CacheConfig, DesignSpace, HierarchyConfig, enumerate_space
from .timing import AccessCounts, Deadline, TimingParams, amt
from .trace import Trace, count_tap


@dataclass(frozen=True)
class OracleOptions:
    back_invalidate: bool = False


class FifoCache:
    def __init__(self, config: CacheConfig):
        self.sets = [[] for _ in range(config.sets)]
        self.mask = config.sets - 1
        self.assoc = config.assoc

    def __contains__(self, block):
        return block in self.sets[block & self.mask]

    def access(self, block):
        """Returns ``(hit, evicted_block_or_None)``."""
        q = self.sets[block & self.mask]
        if block in q:
            return True, None
        victim = q.pop(0) if len(q) == self.assoc else None
        q.append(block)
        return False, victim

    def discard(self, block):
        q = self.sets[block & self.mask]
        if block in q:
            q.remove(block)


def _blocks(trace, block_bytes):
    shift = block_bytes.bit_length() - 1
    return [a >> shift for a in trace.addrs.tolist()]


def _private_pass(trace: Trace, config: CacheConfig, P):
    """Per-processor miss counts and the miss events as (cycle, proc, block)."""
    caches = [FifoCache(config) for _ in range(P)]
    misses = [0] * P
    events = []
    for c, p, w, b in zip(trace.cycles.tolist(), trace.procs.tolist(),
                          trace.writes.tolist(), _blocks(trace, config.block_bytes)):
        hit, _ = caches[p].access(b)
        if not hit:
            misses[p] += 1
            events.append((c, p, b))
        if w:
            for o in range(P):
                if o != p:
                    caches[o].discard(b)
    events.sort()
    return misses, events


def simulate_private_only(trace: Trace, config: CacheConfig, P=None) -> Tuple[int, ...]:
    """Per-processor misses of P coherent FIFO caches of one configuration."""
    P = trace.processor_count if P is None else P
    return tuple(_private_pass(trace, config, P)[0])


def fifo_misses(blocks, config: CacheConfig) -> int:
    """Misses of one FIFO cache over a block stream."""
    cache = FifoCache(config)
    n = 0
    for b in blocks:
        if not cache.access(b)[0]:
            n += 1
    return n


def simulate_hierarchy(trace: Trace, h: HierarchyConfig,
                       options: OracleOptions = OracleOptions()) -> AccessCounts:
    """Exact TAP/TAS/TAM of one hierarchy, both levels simulated together.

    Records of a cycle are applied to the private caches in trace order; the
    cycle's private misses then go to the shared cache in processor order.
    With ``back_invalidate`` a shared eviction also removes the block from
    every private cache.
    """
    P = h.processor_count
    privs = [FifoCache(h.private) for _ in range(P)]
    shared = FifoCache(h.shared)
    shift = h.private.block_bytes.bit_length() - 1
    tas = tam = 0
    rows = zip(trace.cycles.tolist(), trace.procs.tolist(),
               trace.writes.tolist(), trace.addrs.tolist())
    for _, group in groupby(rows, key=lambda r: r[0]):
        pending = []
        for _, p, w, addr in group:
            b = addr >> shift
            hit, _ = privs[p].access(b)
            if not hit:
                pending.append((p, b))
            if w:
                for o in range(P):
                    if o != p:
                        privs[o].discard(b)
        for p, b in sorted(pending):
            tas += 1
            hit, victim = shared.access(b)
            if not hit:
                tam += 1
            if victim is not None and options.back_invalidate:
                for cache in privs:
                    cache.discard(victim)
    return AccessCounts(count_tap(trace), tas, tam)


class MatrixRow(NamedTuple):
    private: CacheConfig
    shared: CacheConfig
    counts: AccessCounts


def _rows_for_private(args):
    trace, pcfg, shared_configs, tap = args
    _, events = _private_pass(trace, pcfg, trace.processor_count)
    stream = [b for _, _, b in events]
    return [MatrixRow(pcfg, scfg, AccessCounts(tap, len(stream), fifo_misses(stream, scfg)))
            for scfg in shared_configs]


def feasibility_matrix(trace: Trace, private_space: DesignSpace, shared_space: DesignSpace,
                       workers=1) -> List[MatrixRow]:
    """Counts for every (private, shared) pair, without back-invalidation.

    Without back-invalidation the private level does not depend on the shared
    cache, so each private configuration is simulated once and its miss
    stream replayed against every shared configuration.
    """
    tap = count_tap(trace)
    shared_configs = enumerate_space(shared_space)
    jobs = [(trace, pcfg, shared_configs, tap) for pcfg in enumerate_space(private_space)]
    if workers and workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            chunks = list(pool.map(_rows_for_private, jobs))
    else:
        chunks = [_rows_for_private(j) for j in jobs]
    return [row for chunk in chunks for row in chunk]


def _selection_key(h: HierarchyConfig):
    return (h.capacity, h.shared.capacity, h.private.capacity,
            h.private.assoc, h.shared.assoc)


def select_from_matrix(rows, processor_count, params: TimingParams,
                       deadline: Deadline) -> Optional[HierarchyConfig]:
    best = None
    for row in rows:
        if amt(row.counts, params) > deadline.wcdmot:
            continue
        h = HierarchyConfig(row.private, row.shared, processor_count)
        if best is None or _selection_key(h) < _selection_key(best):
            best = h
    return best


def exhaustive_select(trace: Trace, private_space: DesignSpace, shared_space: DesignSpace,
                      P, params: TimingParams, deadline: Deadline,
                      workers=1) -> Optional[HierarchyConfig]:
    """Minimum-capacity hierarchy meeting the deadline, or None."""
    rows = feasibility_matrix(trace, private_space, shared_space, workers)
    return select_from_matrix(rows, P, params, deadline)


def _monotone(pairs):
    """True if a strictly larger capacity never has more misses."""
    pairs = sorted(pairs)
    fewest_below = None
    i = 0
    while i < len(pairs):
        j = i
        while j < len(pairs) and pairs[j][0] == pairs[i][0]:
            j += 1
        group = [m for _, m in pairs[i:j]]
        if fewest_below is not None and max(group) > fewest_below:
            return False
        fewest_below = min(group) if fewest_below is None else min(fewest_below, min(group))
        i = j
    return True


def capacity_monotone(rows) -> bool:
    """Whether the matrix has misses non-increasing in capacity at both levels.

    Private level: TAS over private configurations. Shared level: TAM over
    shared configurations, separately behind every private configuration.
    Configurations of equal capacity are not compared with each other.
    """
    tas = {r.private: r.counts.tas for r in rows}
    if not _monotone([(c.capacity, m) for c, m in tas.items()]):
        return False
    by_private = {}
    for r in rows:
        by_private.setdefault(r.private, []).append((r.shared.capacity, r.counts.tam))
    return all(_monotone(v) for v in by_private.values())
