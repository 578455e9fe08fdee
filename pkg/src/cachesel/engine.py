"""Single-pass multi-configuration FIFO simulation engine.

One engine instance evaluates every ``(sets, assoc)`` pair of a design space
for ``P`` processors while the access stream is read once. Two structures
carry the state:

``LookupTable``
    One entry per block ever seen. Entries live in ``2**Lmax`` buckets (block
    mod largest set count, like cache sets) kept sorted by block id for
    binary search. Each entry owns a presence bit array with one bit per
    (set-size level, processor, associativity option).

``SimTree``
    One level per set size. Every set node holds, for each processor and
    each associativity option, a FIFO queue of entry rows (oldest first).

Presence bits and queue membership always agree; :meth:`SinglePassSimulator.audit`
checks that.

Coherence is write-invalidate: a write by processor ``n`` removes the block
from the other processors' queues of the same configuration, and later
entries in the victim queue keep their order. Each configuration is its own
coherent world.

A level is excluded once the smallest total miss count over its
associativities exceeds the miss limit; excluded levels are frozen.
"""

from bisect import bisect_left

import numba
import numpy as np

from .space import DesignSpace

NO_LIMIT = np.iinfo(np.int64).max


class LookupTable:
    def __init__(self, bucket_bits, levels, bits_per_level, capacity=1024):
        self.bucket_bits = bucket_bits
        self._mask = (1 << bucket_bits) - 1
        self._keys = [[] for _ in range(1 << bucket_bits)]
        self._rows = [[] for _ in range(1 << bucket_bits)]
        self.words = max(1, -(-bits_per_level // 64))
        self.blocks = np.empty(capacity, dtype=np.int64)
        self.presence = np.zeros((capacity, levels, self.words), dtype=np.uint64)
        self.size = 0

    def __len__(self):
        return self.size

    def bucket(self, i):
        return self._keys[i]

    def find(self, block):
        """Row of ``block`` or -1."""
        keys = self._keys[block & self._mask]
        i = bisect_left(keys, block)
        if i < len(keys) and keys[i] == block:
            return self._rows[block & self._mask][i]
        return -1

    def row_of(self, block):
        """Row of ``block``, inserting a fresh entry if needed."""
        b = block & self._mask
        keys = self._keys[b]
        i = bisect_left(keys, block)
        if i < len(keys) and keys[i] == block:
            return self._rows[b][i]
        row = self.size
        if row == len(self.blocks):
            self._grow()
        keys.insert(i, block)
        self._rows[b].insert(i, row)
        self.blocks[row] = block
        self.size += 1
        return row

    def rows_for(self, blocks):
        uniq, inverse = np.unique(blocks, return_inverse=True)
        rows = np.fromiter((self.row_of(b) for b in uniq.tolist()),
                           dtype=np.int64, count=len(uniq))
        return rows[inverse]

    def _grow(self):
        cap = 2 * len(self.blocks)
        self.blocks = np.resize(self.blocks, cap)
        grown = np.zeros((cap,) + self.presence.shape[1:], dtype=np.uint64)
        grown[:len(self.presence)] = self.presence
        self.presence = grown


class SimTree:
    def __init__(self, space: DesignSpace, nproc):
        self.space = space
        self.nproc = nproc
        self.set_sizes = np.array(space.set_sizes, dtype=np.int64)
        self.assocs = np.array(space.assocs, dtype=np.int64)
        self.set_base = np.concatenate(([0], np.cumsum(self.set_sizes)[:-1])).astype(np.int64)
        self.assoc_offset = np.concatenate(([0], np.cumsum(self.assocs)[:-1])).astype(np.int64)
        self.sum_assoc = int(self.assocs.sum())
        nL, nA = len(self.set_sizes), len(self.assocs)
        groups = int(self.set_sizes.sum()) * nproc
        self.slots = np.full(groups * self.sum_assoc, -1, dtype=np.int64)
        self.qlen = np.zeros(groups * nA, dtype=np.int64)
        self.misses = np.zeros((nL, nA, nproc), dtype=np.int64)
        self.totals = np.zeros((nL, nA), dtype=np.int64)
        self.excluded = np.zeros(nL, dtype=np.bool_)
        self.excluded_at = np.full(nL, -1, dtype=np.int64)

    def queue(self, level, set_index, proc, assoc_index):
        """Rows in one FIFO queue, oldest first."""
        g = (self.set_base[level] + set_index) * self.nproc + proc
        n = self.qlen[g * len(self.assocs) + assoc_index]
        base = g * self.sum_assoc + self.assoc_offset[assoc_index]
        return self.slots[base:base + n].tolist()


@numba.njit(cache=True)
def _run_chunk(blocks, rows, procs, writes, start, limit,
               set_sizes, set_base, assocs, assoc_offset, sum_assoc, nproc,
               slots, qlen, presence, misses, totals, excluded, excluded_at,
               track_level, track_assoc, miss_flags):
    nL = set_sizes.shape[0]
    nA = assocs.shape[0]
    one = np.uint64(1)
    for r in range(blocks.shape[0]):
        b = blocks[r]
        row = rows[r]
        p = procs[r]
        w = writes[r]
        for L in range(nL):
            if excluded[L]:
                continue
            node = set_base[L] + (b & (set_sizes[L] - 1))
            missed = False
            for a in range(nA):
                bit = p * nA + a
                word = bit >> 6
                mask = one << np.uint64(bit & 63)
                if presence[row, L, word] & mask == 0:
                    missed = True
                    misses[L, a, p] += 1
                    totals[L, a] += 1
                    if L == track_level and a == track_assoc:
                        miss_flags[r] = True
                    g = node * nproc + p
                    q = g * nA + a
                    base = g * sum_assoc + assoc_offset[a]
                    cap = assocs[a]
                    n = qlen[q]
                    if n == cap:
                        victim = slots[base]
                        for i in range(cap - 1):
                            slots[base + i] = slots[base + i + 1]
                        presence[victim, L, word] &= ~mask
                        n -= 1
                    slots[base + n] = row
                    qlen[q] = n + 1
                    presence[row, L, word] |= mask
                if w:
                    # the writer keeps its copy; everyone else loses theirs
                    for o in range(nproc):
                        if o == p:
                            continue
                        obit = o * nA + a
                        oword = obit >> 6
                        omask = one << np.uint64(obit & 63)
                        if presence[row, L, oword] & omask == 0:
                            continue
                        g = node * nproc + o
                        q = g * nA + a
                        base = g * sum_assoc + assoc_offset[a]
                        n = qlen[q]
                        i = 0
                        while slots[base + i] != row:
                            i += 1
                        for j in range(i, n - 1):
                            slots[base + j] = slots[base + j + 1]
                        slots[base + n - 1] = -1
                        qlen[q] = n - 1
                        presence[row, L, oword] &= ~omask
            if missed:
                best = totals[L, 0]
                for a in range(1, nA):
                    if totals[L, a] < best:
                        best = totals[L, a]
                if best > limit:
                    excluded[L] = True
                    excluded_at[L] = start + r


class SinglePassSimulator:
    """Drives the kernel over chunks of ``(block, proc, is_write)`` accesses."""

    def __init__(self, space: DesignSpace, nproc, miss_limit=None, track=None):
        self.space = space
        self.nproc = nproc
        self.miss_limit = NO_LIMIT if miss_limit is None else int(miss_limit)
        self.tree = SimTree(space, nproc)
        nL, nA = len(space.set_sizes), len(space.assocs)
        bucket_bits = space.set_sizes[-1].bit_length() - 1
        self.table = LookupTable(bucket_bits, nL, nproc * nA)
        self.track = (-1, -1) if track is None else track
        self.records = 0

    def feed(self, blocks, procs, writes):
        """Simulate one chunk; returns per-record miss flags for the tracked config."""
        blocks = np.ascontiguousarray(blocks, dtype=np.int64)
        procs = np.ascontiguousarray(procs, dtype=np.int64)
        writes = np.ascontiguousarray(writes, dtype=np.bool_)
        rows = self.table.rows_for(blocks) if len(blocks) else np.empty(0, np.int64)
        flags = np.zeros(len(blocks), dtype=np.bool_)
        t = self.tree
        _run_chunk(blocks, rows, procs, writes, self.records, self.miss_limit,
                   t.set_sizes, t.set_base, t.assocs, t.assoc_offset, t.sum_assoc, self.nproc,
                   t.slots, t.qlen, self.table.presence, t.misses, t.totals,
                   t.excluded, t.excluded_at, self.track[0], self.track[1], flags)
        self.records += len(blocks)
        return flags

    def audit(self):
        """Check presence bits against queue contents; raises AssertionError."""
        t, lt = self.tree, self.table
        nA = len(t.assocs)
        expected = np.zeros_like(lt.presence)
        for L, S in enumerate(t.set_sizes.tolist()):
            for s in range(S):
                for p in range(self.nproc):
                    for a in range(nA):
                        q = t.queue(L, s, p, a)
                        if len(q) > t.assocs[a]:
                            raise AssertionError(f"queue over capacity at L={L} s={s} p={p} a={a}")
                        if len(set(q)) != len(q):
                            raise AssertionError(f"duplicate block in queue L={L} s={s} p={p} a={a}")
                        bit = p * nA + a
                        for row in q:
                            if lt.blocks[row] % S != s:
                                raise AssertionError(f"block {lt.blocks[row]} in wrong set {s} at S={S}")
                            expected[row, L, bit >> 6] |= np.uint64(1) << np.uint64(bit & 63)
        if not np.array_equal(expected, lt.presence):
            bad = np.argwhere(expected != lt.presence)[0]
            raise AssertionError(f"presence bits disagree with queues at row/level/word {tuple(bad)}")
        for i in range(1 << lt.bucket_bits):
            keys = lt.bucket(i)
            if any(b <= a for a, b in zip(keys, keys[1:])):
                raise AssertionError(f"lookup bucket {i} not strictly sorted")
            if any(k & ((1 << lt.bucket_bits) - 1) != i for k in keys):
                raise AssertionError(f"lookup bucket {i} holds a foreign block")


class RunCounters:
    """Process-wide tallies of simulator invocations (for instrumentation)."""

    def __init__(self):
        self.reset()

    def reset(self):
        self.private_runs = 0
        self.shared_runs = 0
        self.secondary_emits = 0

    def snapshot(self):
        return dict(private_runs=self.private_runs, shared_runs=self.shared_runs,
                    secondary_emits=self.secondary_emits)


counters = RunCounters()
