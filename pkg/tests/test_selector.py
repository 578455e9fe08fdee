import pytest

from cachesel import oracle
from cachesel.engine import counters
from cachesel.errors import (InfeasibleDeadline, NoFeasiblePrivate, NoFeasibleShared,
                             RequiresFullRun, StaleCache)
from cachesel.selector import load_cache, reselect, save_cache, select_hierarchy
from cachesel.space import CacheConfig, DesignSpace, HierarchyConfig
from cachesel.timing import Deadline, TimingParams, amt
from cachesel.trace import CountingReader, SyntheticTraceSpec, Trace, count_tap, generate_synthetic

from conftest import SMALL_SPACE, TINY_SPACE, loop_trace

PARAMS = TimingParams(1, 4, 15)


def run(trace, w, space=SMALL_SPACE):
    return select_hierarchy(trace, space, space, PARAMS, Deadline(w))


@pytest.fixture(scope="module")
def trace():
    return generate_synthetic(SyntheticTraceSpec(3, 4000, address_space_bytes=1 << 14, seed=21))


@pytest.fixture(scope="module")
def matrix(trace):
    return oracle.feasibility_matrix(trace, TINY_SPACE, TINY_SPACE)


def _amt_range(trace):
    lo = count_tap(trace) * PARAMS.tp
    return lo, lo + len(trace) * (PARAMS.ts + PARAMS.tm)


def test_empty_trace_gives_unit_hierarchy():
    r = run(Trace.empty(4), 10**9)
    assert r.hierarchy == HierarchyConfig(CacheConfig(1, 1), CacheConfig(1, 1), 4)
    assert r.amt_ns == 0 and r.counts.tas == 0


def test_below_tap_is_infeasible(trace):
    with pytest.raises(InfeasibleDeadline) as e:
        run(trace, count_tap(trace) - 1)
    assert e.value.stage == "budget"


def test_report_invariants(trace):
    lo, hi = _amt_range(trace)
    for w in (hi, (lo + hi) // 2, lo + (hi - lo) // 4):
        try:
            r = run(trace, w)
        except (NoFeasiblePrivate, NoFeasibleShared):
            continue
        assert r.amt_ns == amt(r.counts, PARAMS) <= w
        assert r.counts.tap == count_tap(trace)
        s = r.summary()
        assert s["amt_ns"] == r.amt_ns and s["hierarchy_capacity"] == r.hierarchy.capacity
        assert sum(s["configs"][k] for k in ("private_simulated", "private_excluded")) == 45


def test_counts_agree_with_integrated_oracle(trace):
    lo, hi = _amt_range(trace)
    r = run(trace, (lo + hi) // 2)
    assert oracle.simulate_hierarchy(trace, r.hierarchy) == r.counts


def test_generous_deadline_picks_fewest_private_misses(trace):
    r = run(trace, 10**12)
    best = min(r.private_result.tas_prime(c) for c in r.private_result.configs())
    assert r.counts.tas == best


def test_each_stage_reads_its_input_once(trace):
    reader = CountingReader(trace)
    lo, hi = _amt_range(trace)
    select_hierarchy(reader, SMALL_SPACE, SMALL_SPACE, PARAMS, Deadline(hi))
    # one pass for the private level, one more to emit the chosen miss stream
    assert reader.passes == 2


def test_infeasible_private_stage_named():
    tr = loop_trace(1, 5, 600)  # misses everywhere in TINY_SPACE
    tap = count_tap(tr)
    with pytest.raises(NoFeasiblePrivate) as e:
        select_hierarchy(tr, TINY_SPACE, TINY_SPACE, PARAMS, Deadline(tap + 4 * 1000))
    assert e.value.stage == "private"
    assert "stage=private" in str(e.value)


# reselection

def test_reselect_same_deadline_is_identity(trace):
    lo, hi = _amt_range(trace)
    r = run(trace, (lo + hi) // 2)
    counters.reset()
    r2 = reselect(r, r.deadline)
    assert r2.hierarchy == r.hierarchy and r2.summary()["counts"] == r.summary()["counts"]
    assert counters.private_runs == 0 and counters.shared_runs == 0
    assert r2.private_cached and r2.shared_cached


def test_reselect_equals_fresh_run(trace):
    lo, hi = _amt_range(trace)
    r = run(trace, hi)
    for frac in (0.6, 0.3, 0.27, 0.24, 0.21, 0.15, 0.05):
        w = lo + int((hi - lo) * frac)
        try:
            fresh = run(trace, w)
        except (NoFeasiblePrivate, NoFeasibleShared) as e:
            with pytest.raises(type(e)):
                reselect(r, Deadline(w))
            continue
        counters.reset()
        again = reselect(r, Deadline(w))
        assert counters.private_runs == 0
        assert again.hierarchy == fresh.hierarchy
        assert again.counts == fresh.counts and again.tam_prime == fresh.tam_prime


def test_reselect_rejects_looser_deadline(trace):
    r = run(trace, 10**8)
    with pytest.raises(RequiresFullRun):
        reselect(r, Deadline(10**8 + 1))


def test_reselect_below_tap(trace):
    r = run(trace, 10**8)
    with pytest.raises(InfeasibleDeadline):
        reselect(r, Deadline(count_tap(trace) - 1))


def test_reselect_with_wrong_trace_is_stale(trace):
    lo, hi = _amt_range(trace)
    r = run(trace, hi)
    r.shared_result.miss_limit = 0  # cached shared counts no longer cover the new budget
    other = generate_synthetic(SyntheticTraceSpec(3, 4000, address_space_bytes=1 << 14, seed=22))
    with pytest.raises(StaleCache):
        reselect(r, Deadline(hi - 1), trace=other)
    counters.reset()
    again = reselect(r, Deadline(hi - 1))
    assert (counters.private_runs, counters.shared_runs, counters.secondary_emits) == (0, 1, 1)
    assert again.private_cached and not again.shared_cached
    assert again.hierarchy == run(trace, hi - 1).hierarchy


def test_cache_file_round_trip(tmp_path, trace):
    lo, hi = _amt_range(trace)
    r = run(trace, hi)
    path = tmp_path / "c.json"
    save_cache(r, path)
    loaded = load_cache(path, trace)
    assert loaded.hierarchy == r.hierarchy and loaded.counts == r.counts
    w = lo + (hi - lo) // 4
    counters.reset()
    assert reselect(loaded, Deadline(w)).hierarchy == run(trace, w).hierarchy
    save_cache(r, tmp_path / "d.json")
    assert (tmp_path / "d.json").read_bytes() == path.read_bytes()


def test_cache_file_refuses_other_trace(tmp_path, trace):
    r = run(trace, 10**8)
    save_cache(r, tmp_path / "c.json")
    with pytest.raises(StaleCache):
        load_cache(tmp_path / "c.json", Trace.empty(3))
    (tmp_path / "bad.json").write_text('{"format": "x"}')
    with pytest.raises(StaleCache):
        load_cache(tmp_path / "bad.json")


# checks of the optimality argument on oracle data

def test_equal_tap_and_tam_at_the_deadline_forces_equal_tas(matrix):
    by_amt = {}
    for row in matrix:
        c = row.counts
        by_amt.setdefault((amt(c, PARAMS), c.tap, c.tam), set()).add(c.tas)
    # each (amt, tap, tam) group is what "exactly meets a deadline w = amt" means
    assert all(len(v) == 1 for v in by_amt.values())


def _q2_violations(trace, space):
    rows = oracle.feasibility_matrix(trace, space, space)
    lo, hi = _amt_range(trace)
    biggest = max(space, key=lambda c: (c.capacity, c.assoc))
    single = DesignSpace((biggest.sets,), (biggest.assoc,), biggest.block_bytes)
    bad = 0
    for frac in (0.02, 0.05, 0.1, 0.2, 0.4):
        w = lo + int((hi - lo) * frac)
        try:
            select_hierarchy(trace, single, space, PARAMS, Deadline(w))
            continue
        except (NoFeasiblePrivate, NoFeasibleShared):
            pass
        if oracle.select_from_matrix(rows, trace.processor_count, PARAMS, Deadline(w)):
            bad += 1
    return bad, oracle.capacity_monotone(rows)


def test_largest_private_failing_means_nothing_fits():
    total = 0
    for seed in range(4):
        tr = loop_trace(2, 4, 20 + 10 * seed, seed=seed)
        bad, mono = _q2_violations(tr, TINY_SPACE)
        if mono:
            assert bad == 0
        total += bad
    for seed in range(4):
        tr = generate_synthetic(SyntheticTraceSpec(2, 1500, address_space_bytes=4096, seed=seed))
        total += _q2_violations(tr, TINY_SPACE)[0]
    print(f"largest-private check: {total} violations on non-monotone traces")
