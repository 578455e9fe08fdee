"""Multiprocessor data-access traces.

A trace is an ordered list of ``(cycle, processor, op, address)`` records.
Cycles never decrease and a processor issues at most one access per cycle;
several processors may share a cycle, which is what makes the number of
distinct access cycles smaller than the record count.

Records are kept column-wise in read-only numpy arrays so that million-record
traces stay cheap. Iterating a :class:`Trace` still yields
:class:`AccessRecord` values.

File format::

    # comment
    processors 4
    42 3 R 0x1A2B3C40
"""

import enum
import hashlib
import io
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Optional, TextIO

import numpy as np

from .errors import (DuplicateProcessorCycle, InvalidBlockSize, InvalidSpec,
                     MalformedLine, NonMonotonicCycle, ProcessorOutOfRange)

CHUNK_RECORDS = 1 << 16


class Op(enum.Enum):
    READ = "R"
    WRITE = "W"


@dataclass(frozen=True)
class AccessRecord:
    cycle: int
    processor: int
    op: Op
    address: int

    @property
    def is_write(self):
        return self.op is Op.WRITE


class TraceChunk(NamedTuple):
    cycles: np.ndarray
    procs: np.ndarray
    writes: np.ndarray
    addrs: np.ndarray
    start: int


def _frozen(values, dtype):
    arr = np.ascontiguousarray(values, dtype=dtype)
    arr.setflags(write=False)
    return arr


def record_bytes(cycles, procs, writes, addrs):
    """Canonical little-endian byte image of a run of records (for hashing)."""
    mat = np.empty((len(cycles), 4), dtype="<i8")
    mat[:, 0] = cycles
    mat[:, 1] = procs
    mat[:, 2] = writes
    mat[:, 3] = addrs
    return mat.tobytes()


class Trace:
    """Validated, immutable access trace."""

    def __init__(self, cycles, procs, writes, addrs, processor_count, validate=True):
        if processor_count < 1:
            raise InvalidSpec(f"processor_count must be >= 1, got {processor_count}")
        self.processor_count = int(processor_count)
        self.cycles = _frozen(cycles, np.int64)
        self.procs = _frozen(procs, np.int64)
        self.writes = _frozen(writes, np.bool_)
        self.addrs = _frozen(addrs, np.int64)
        n = len(self.cycles)
        if not (len(self.procs) == len(self.writes) == len(self.addrs) == n):
            raise ValueError("trace columns have different lengths")
        if validate:
            self._validate()
        self._digest = None

    @classmethod
    def from_records(cls, records: Iterable[AccessRecord], processor_count: int):
        records = list(records)
        return cls([r.cycle for r in records],
                   [r.processor for r in records],
                   [r.op is Op.WRITE for r in records],
                   [r.address for r in records],
                   processor_count)

    @classmethod
    def empty(cls, processor_count):
        return cls([], [], [], [], processor_count)

    def _validate(self):
        c, p = self.cycles, self.procs
        if len(c) == 0:
            return
        if c.min() < 0 or self.addrs.min() < 0:
            raise ValueError("cycles and addresses must be non-negative")
        bad = np.flatnonzero((p < 0) | (p >= self.processor_count))
        if len(bad):
            i = int(bad[0])
            raise ProcessorOutOfRange(
                f"record {i}: processor {int(p[i])} not in [0, {self.processor_count})")
        back = np.flatnonzero(np.diff(c) < 0)
        if len(back):
            i = int(back[0]) + 1
            raise NonMonotonicCycle(
                f"record {i}: cycle {int(c[i])} after {int(c[i - 1])}")
        key = c * self.processor_count + p
        order = np.argsort(key, kind="stable")
        dup = np.flatnonzero(np.diff(key[order]) == 0)
        if len(dup):
            i = int(order[dup[0] + 1])
            raise DuplicateProcessorCycle(
                f"record {i}: processor {int(p[i])} already accessed in cycle {int(c[i])}")

    def __len__(self):
        return len(self.cycles)

    def __getitem__(self, i):
        return AccessRecord(int(self.cycles[i]), int(self.procs[i]),
                            Op.WRITE if self.writes[i] else Op.READ, int(self.addrs[i]))

    def __iter__(self) -> Iterator[AccessRecord]:
        for c, p, w, a in zip(self.cycles.tolist(), self.procs.tolist(),
                              self.writes.tolist(), self.addrs.tolist()):
            yield AccessRecord(c, p, Op.WRITE if w else Op.READ, a)

    @property
    def records(self):
        return tuple(self)

    def __eq__(self, other):
        if not isinstance(other, Trace):
            return NotImplemented
        return (self.processor_count == other.processor_count
                and np.array_equal(self.cycles, other.cycles)
                and np.array_equal(self.procs, other.procs)
                and np.array_equal(self.writes, other.writes)
                and np.array_equal(self.addrs, other.addrs))

    __hash__ = None

    def __repr__(self):
        return f"Trace({len(self)} records, processors={self.processor_count})"

    def iter_chunks(self, size=CHUNK_RECORDS) -> Iterator[TraceChunk]:
        for start in range(0, len(self), size):
            stop = start + size
            yield TraceChunk(self.cycles[start:stop], self.procs[start:stop],
                             self.writes[start:stop], self.addrs[start:stop], start)

    def digest(self):
        """SHA-256 identity of the trace contents (hex)."""
        if self._digest is None:
            h = new_trace_hasher(self.processor_count)
            for ch in self.iter_chunks():
                h.update(record_bytes(ch.cycles, ch.procs, ch.writes, ch.addrs))
            self._digest = h.hexdigest()
        return self._digest


def new_trace_hasher(processor_count):
    h = hashlib.sha256()
    h.update(f"trace/v1 processors={processor_count}\n".encode())
    return h


class CountingReader:
    """Instrumented wrapper around a chunked source.

    Counts how many times the source was opened for reading and how many
    records were handed out, so callers can prove a single pass.
    """

    def __init__(self, source):
        self.source = source
        self.passes = 0
        self.records_read = 0

    def __getattr__(self, name):
        return getattr(self.source, name)

    def __len__(self):
        return len(self.source)

    def iter_chunks(self, size=CHUNK_RECORDS):
        self.passes += 1
        for chunk in self.source.iter_chunks(size):
            self.records_read += len(chunk[0])
            yield chunk


# -- derived quantities ------------------------------------------------------

def count_tap(trace) -> int:
    """Number of distinct cycles in which at least one access happened."""
    if len(trace) == 0:
        return 0
    return 1 + int(np.count_nonzero(np.diff(trace.cycles)))


def check_block_size(block_bytes):
    if not isinstance(block_bytes, (int, np.integer)) or block_bytes < 1 \
            or block_bytes & (block_bytes - 1):
        raise InvalidBlockSize(f"block size must be a power of two >= 1, got {block_bytes!r}")
    return int(block_bytes).bit_length() - 1


def block_of(address, block_bytes):
    """Block id holding ``address``; works on ints and numpy arrays."""
    shift = check_block_size(block_bytes)
    return address >> shift


# -- text format -------------------------------------------------------------

def _parse_lines(lines: Iterable[str]):
    processor_count = None
    cycles, procs, writes, addrs = [], [], [], []
    last_cycle = -1
    seen = set()
    for lineno, raw in enumerate(lines, 1):
        line = raw.rstrip("\r\n")
        if not line.strip() or line.startswith("#"):
            continue
        if processor_count is None:
            parts = line.split(" ")
            if len(parts) != 2 or parts[0] != "processors" or not parts[1].isdigit():
                raise MalformedLine(f"expected 'processors <P>', got {line!r}", lineno)
            processor_count = int(parts[1])
            if processor_count < 1:
                raise MalformedLine("processor count must be >= 1", lineno)
            continue
        parts = line.split(" ")
        if (len(parts) != 4 or not parts[0].isdigit() or not parts[1].isdigit()
                or parts[2] not in ("R", "W") or not parts[3].startswith("0x")):
            raise MalformedLine(f"expected '<cycle> <proc> <R|W> <0xADDR>', got {line!r}", lineno)
        try:
            addr = int(parts[3][2:], 16)
        except ValueError:
            raise MalformedLine(f"bad hex address {parts[3]!r}", lineno) from None
        cycle, proc = int(parts[0]), int(parts[1])
        if proc >= processor_count:
            raise ProcessorOutOfRange(
                f"processor {proc} not in [0, {processor_count})", lineno)
        if cycle < last_cycle:
            raise NonMonotonicCycle(f"cycle {cycle} after {last_cycle}", lineno)
        if cycle != last_cycle:
            seen.clear()
            last_cycle = cycle
        if proc in seen:
            raise DuplicateProcessorCycle(
                f"processor {proc} already accessed in cycle {cycle}", lineno)
        seen.add(proc)
        cycles.append(cycle)
        procs.append(proc)
        writes.append(parts[2] == "W")
        addrs.append(addr)
    if processor_count is None:
        raise MalformedLine("missing 'processors <P>' header", None)
    return Trace(cycles, procs, writes, addrs, processor_count, validate=False)


def parse_trace(stream) -> Trace:
    """Parse a trace from a text stream or string."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    return _parse_lines(stream)


def read_trace(path) -> Trace:
    with open(path, encoding="utf-8") as f:
        return parse_trace(f)


def render(trace: Trace) -> str:
    out = io.StringIO()
    write_trace(trace, out)
    return out.getvalue()


def write_trace(trace: Trace, stream: TextIO):
    stream.write(f"processors {trace.processor_count}\n")
    ops = np.where(trace.writes, "W", "R")
    for c, p, o, a in zip(trace.cycles.tolist(), trace.procs.tolist(),
                          ops.tolist(), trace.addrs.tolist()):
        stream.write(f"{c} {p} {o} 0x{a:X}\n")


# -- synthetic workloads -----------------------------------------------------

@dataclass(frozen=True)
class SyntheticTraceSpec:
    """Parameters of the synthetic two-pool workload.

    The address space is split into one shared region (an eighth of the space)
    followed by one private region per processor. Each access goes to the
    shared region with probability ``shared_fraction``, otherwise to the
    issuing processor's own region. Inside a region it hits the hot working
    set (the first 1/32 of the region) with probability
    ``locality_hot_fraction`` and is uniform over the whole region otherwise.
    Addresses are word (4-byte) aligned.

    Ops are Bernoulli(``write_fraction``); the realized write fraction of an
    ``n``-record trace is within 4 standard deviations
    (``4 * sqrt(f(1-f)/n)``) of the target except with negligible probability.
    """

    processor_count: int
    record_count: int
    address_space_bytes: int = 1 << 16
    shared_fraction: float = 0.2
    write_fraction: float = 0.3
    locality_hot_fraction: float = 0.8
    seed: int = 0

    def validate(self):
        if self.processor_count < 1:
            raise InvalidSpec("processor_count must be >= 1")
        if self.record_count < 0:
            raise InvalidSpec("record_count must be >= 0")
        for name in ("shared_fraction", "write_fraction", "locality_hot_fraction"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise InvalidSpec(f"{name} must lie in [0, 1], got {v}")
        words = self.address_space_bytes // 4
        if words < 8 * (self.processor_count + 1):
            raise InvalidSpec("address space too small for the region layout")


WORD = 4


def generate_synthetic(spec: SyntheticTraceSpec) -> Trace:
    spec.validate()
    P, n = spec.processor_count, spec.record_count
    if n == 0:
        return Trace.empty(P)
    rng = np.random.default_rng(spec.seed)

    # each processor issues at geometric gaps; merge and keep the first n
    gaps = rng.geometric(0.5, size=(P, n))
    per_proc = np.cumsum(gaps, axis=1)
    cycles = per_proc.ravel()
    procs = np.repeat(np.arange(P), n)
    order = np.lexsort((procs, cycles))[:n]
    cycles, procs = cycles[order], procs[order]

    writes = rng.random(n) < spec.write_fraction

    words = spec.address_space_bytes // WORD
    shared_words = max(words // 8, 1)
    private_words = (words - shared_words) // P
    shared = rng.random(n) < spec.shared_fraction
    region_base = np.where(shared, 0, shared_words + procs * private_words)
    region_size = np.where(shared, shared_words, private_words)
    hot_size = np.maximum(region_size // 32, 1)
    hot = rng.random(n) < spec.locality_hot_fraction
    span = np.where(hot, hot_size, region_size)
    offset = (rng.random(n) * span).astype(np.int64)
    addrs = (region_base + offset) * WORD
    return Trace(cycles, procs, writes, addrs, P)
