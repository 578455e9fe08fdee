import pytest
from hypothesis import given
from hypothesis import strategies as st

from cachesel.budget import PerfBudget, predict_budgets
from cachesel.errors import InfeasibleDeadline, InvalidConfig
from cachesel.space import (CacheConfig, DesignSpace, HierarchyConfig, capacity, default_space,
                            enumerate_space, hierarchy_capacity, parse_sets, powers_of_two)
from cachesel.timing import (AccessCounts, Deadline, TimingParams, amt, feasible, max_tam,
                             parse_duration)

from conftest import make_trace

PARAMS = TimingParams(1, 4, 15)


# -- design space ------------------------------------------------------------

def test_default_space_has_75_configs():
    configs = enumerate_space(default_space())
    assert len(configs) == 75
    assert configs[0] == CacheConfig(1, 1, 4)
    assert configs[-1] == CacheConfig(16384, 16, 4)


def test_singleton_space():
    assert enumerate_space(DesignSpace((8,), (2,), 4)) == [CacheConfig(8, 2, 4)]


def test_45_config_space():
    space = DesignSpace(powers_of_two(1, 256), (1, 2, 4, 8, 16), 4)
    configs = enumerate_space(space)
    assert len(configs) == 45
    assert len(set(configs)) == 45
    assert configs == sorted(configs, key=lambda c: (c.sets, c.assoc))


def test_capacity_examples():
    assert capacity(CacheConfig(8, 16, 4)) == 512
    assert capacity(CacheConfig(1, 1, 4)) == 4
    assert capacity(CacheConfig(8, 2, 4)) == 64


def test_hierarchy_capacity_examples():
    assert hierarchy_capacity(HierarchyConfig(CacheConfig(8, 2), CacheConfig(1, 2), 6)) == 392
    assert hierarchy_capacity(HierarchyConfig(CacheConfig(1, 1), CacheConfig(1, 1), 1)) == 8
    assert hierarchy_capacity(HierarchyConfig(CacheConfig(1, 1), CacheConfig(1, 1), 2)) == 2 * 4 + 4


@given(st.integers(0, 10), st.integers(1, 32), st.integers(0, 6))
def test_capacity_strictly_monotone(ls, a, lb):
    c = CacheConfig(1 << ls, a, 1 << lb)
    assert CacheConfig(2 << ls, a, 1 << lb).capacity > c.capacity
    assert CacheConfig(1 << ls, a + 1, 1 << lb).capacity > c.capacity
    assert CacheConfig(1 << ls, a, 2 << lb).capacity > c.capacity


@pytest.mark.parametrize("args", [(3, 1, 4), (0, 1, 4), (4, 0, 4), (4, 1, 6)])
def test_cache_config_invalid(args):
    with pytest.raises(InvalidConfig):
        CacheConfig(*args)


def test_non_fifo_rejected():
    with pytest.raises(InvalidConfig):
        CacheConfig(4, 1, 4, "LRU")


@pytest.mark.parametrize("sets, assocs", [((), (1,)), ((1, 1), (1,)), ((2, 1), (1,)),
                                          ((1, 3), (1,)), ((1,), (2, 1))])
def test_design_space_invalid(sets, assocs):
    with pytest.raises(InvalidConfig):
        DesignSpace(sets, assocs, 4)


def test_hierarchy_requires_common_block():
    with pytest.raises(InvalidConfig):
        HierarchyConfig(CacheConfig(1, 1, 4), CacheConfig(1, 1, 8), 2)


def test_parse_sets_and_config():
    assert parse_sets("1..16384") == powers_of_two(1, 16384)
    assert len(parse_sets("1..16384")) == 15
    assert parse_sets("1,4,8") == (1, 4, 8)
    assert CacheConfig.parse("8x2") == CacheConfig(8, 2, 4)
    assert CacheConfig.parse("64X16").capacity == 4096


# -- timing ------------------------------------------------------------------

def test_amt_examples():
    assert amt(AccessCounts(0, 0, 0), PARAMS) == 0
    assert amt(AccessCounts(10**6, 4 * 10**5, 10**5), PARAMS) == 4_100_000
    assert amt(AccessCounts(1, 1, 1), PARAMS) == 20


def test_feasible_examples():
    one = AccessCounts(1, 1, 1)
    assert feasible(one, PARAMS, Deadline(20))
    assert not feasible(AccessCounts(2, 1, 1), PARAMS, Deadline(20))  # amt 21
    assert feasible(AccessCounts(0, 0, 0), PARAMS, Deadline(0))


def test_max_tam_examples():
    assert max_tam(100, 50, PARAMS, Deadline(100 + 50 * 4)) == 0
    assert max_tam(1000, 1000, PARAMS, Deadline(10000)) == 333
    assert max_tam(1000, 2000, PARAMS, Deadline(10000)) == 66
    assert max_tam(1000, 3000, PARAMS, Deadline(10000)) is None


def test_timing_params_ordering():
    with pytest.raises(InvalidConfig):
        TimingParams(4, 1, 15)
    with pytest.raises(InvalidConfig):
        TimingParams(0, 4, 15)


def test_access_counts_invariants():
    with pytest.raises(ValueError):
        AccessCounts(1, 1, 2)
    with pytest.raises(ValueError):
        AccessCounts(-1, 0, 0)


counts = st.tuples(st.integers(0, 10**6), st.integers(0, 10**6)).flatmap(
    lambda t: st.builds(AccessCounts, st.just(t[0]), st.just(t[1]), st.integers(0, t[1])))


@given(counts, counts)
def test_amt_linear(a, b):
    assert amt(a + b, PARAMS) == amt(a, PARAMS) + amt(b, PARAMS)


@given(st.integers(0, 10**5), st.integers(0, 10**5), st.integers(0, 10**7),
       st.integers(1, 1000), st.integers(1, 1000))
def test_max_tam_properties(tap, tas, wcdmot, dtap, dtas):
    d = Deadline(wcdmot)
    m = max_tam(tap, tas, PARAMS, d)
    for worse in (max_tam(tap + dtap, tas, PARAMS, d), max_tam(tap, tas + dtas, PARAMS, d)):
        if m is None:
            assert worse is None
        elif worse is not None:
            assert worse <= m
    if m is not None:
        # AccessCounts insists on tam <= tas, so check the sum directly
        assert tap * 1 + tas * 4 + m * 15 <= wcdmot
        assert tap * 1 + tas * 4 + (m + 1) * 15 > wcdmot


@pytest.mark.parametrize("text, ns", [("1.0s", 10**9), ("1s", 10**9), ("0.4s", 4 * 10**8),
                                      ("250ms", 250 * 10**6), ("40us", 40_000),
                                      ("123ns", 123), ("0.15", 150 * 10**6), ("1e-6s", 1000)])
def test_parse_duration(text, ns):
    assert parse_duration(text) == ns


@pytest.mark.parametrize("text", ["", "fast", "1.5ns", "-1s", "1 min"])
def test_parse_duration_rejects(text):
    with pytest.raises(InvalidConfig):
        parse_duration(text)


# -- budgets -----------------------------------------------------------------

def _trace_with_tap(n):
    return make_trace([(i, 0, "R", 0) for i in range(n)], 1)


def test_budget_zero_slack():
    tr = _trace_with_tap(50)
    assert predict_budgets(tr, PARAMS, Deadline(50)) == PerfBudget(50, 0, 0)


def test_budget_example():
    tr = _trace_with_tap(1000)
    assert predict_budgets(tr, PARAMS, Deadline(10000)) == PerfBudget(1000, 2250, 600)


def test_budget_negative_slack():
    with pytest.raises(InfeasibleDeadline):
        predict_budgets(_trace_with_tap(1000), PARAMS, Deadline(999))
