import numpy as np
import pytest

from cachesel.space import DesignSpace, powers_of_two
from cachesel.trace import Trace


def make_trace(rows, processors):
    """rows: (cycle, proc, 'R'|'W', address)."""
    if not rows:
        return Trace.empty(processors)
    c, p, o, a = zip(*rows)
    return Trace(c, p, [x == "W" for x in o], a, processors)


def block_trace(blocks, processors=1, ops=None, procs=None, block_bytes=4):
    """One access per cycle, addresses = block * block_bytes."""
    n = len(blocks)
    procs = procs or [0] * n
    ops = ops or ["R"] * n
    return make_trace([(i + 1, procs[i], ops[i], blocks[i] * block_bytes) for i in range(n)],
                      processors)


def loop_trace(processors, passes, working_blocks, seed=0):
    """Each processor re-reads its own run of consecutive blocks, round robin.

    Under FIFO a loop over k blocks misses every time when a set's share of
    the loop exceeds its ways and only on first touch otherwise, so miss
    counts fall monotonically with capacity.
    """
    rng = np.random.default_rng(seed)
    rows = []
    cycle = 0
    bases = [p * 4096 for p in range(processors)]
    for _ in range(passes):
        for i in range(working_blocks):
            cycle += 1
            for p in range(processors):
                if rng.random() < 0.9:
                    rows.append((cycle, p, "R", (bases[p] + i) * 4))
    return make_trace(rows, processors)


SMALL_SPACE = DesignSpace(powers_of_two(1, 256), (1, 2, 4, 8, 16), 4)
TINY_SPACE = DesignSpace(powers_of_two(1, 8), (1, 2, 4), 4)


@pytest.fixture
def small_space():
    return SMALL_SPACE


@pytest.fixture
def tiny_space():
    return TINY_SPACE


# one line per acceptance criterion, shown after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
