"""End-to-end hierarchy selection and reselection from cached results.

Flow: budgets from the trace and deadline -> one pass over the trace for all
private configurations -> pick the private level -> emit its miss stream ->
one pass over that stream for all shared configurations -> pick the shared
cache.

When the deadline later tightens, the private-level counts already cached
are enough to choose the new private level: every configuration that can
still qualify stayed under the old (looser) miss limit, so its count is
exact. Only the shared level may need simulating again.
"""

import json
import time
from dataclasses import dataclass, field
from typing import Optional

from .budget import PerfBudget, budget_from_tap, predict_budgets
from .errors import RequiresFullRun, StaleCache
from .private import (PrivateSimResult, emit_secondary_trace, select_private,
                      simulate_private)
from .shared import SharedSimResult, select_shared, simulate_shared
from .space import CacheConfig, DesignSpace, HierarchyConfig
from .timing import AccessCounts, Deadline, TimingParams, amt

CACHE_FORMAT = "cachesel-cache"
CACHE_VERSION = 1


@dataclass
class SelectionReport:
    hierarchy: HierarchyConfig
    budget: PerfBudget
    counts: AccessCounts
    amt_ns: int
    deadline: Deadline
    params: TimingParams
    tam_prime: int
    private_result: PrivateSimResult
    shared_result: SharedSimResult
    private_cached: bool = False
    shared_cached: bool = False
    duration_s: float = 0.0
    trace: object = field(default=None, repr=False, compare=False)

    @property
    def private_space(self) -> DesignSpace:
        return self.private_result.space

    @property
    def shared_space(self) -> DesignSpace:
        return self.shared_result.space

    def summary(self):
        """JSON-ready dict without wall-clock fields."""
        h = self.hierarchy
        p_sim, p_excl = self.private_result.tallies()
        s_sim, s_excl = self.shared_result.tallies()
        return {
            "trace_digest": self.private_result.trace_digest,
            "processors": h.processor_count,
            "wcdmot_ns": self.deadline.wcdmot,
            "timing_ns": {"tp": self.params.tp, "ts": self.params.ts, "tm": self.params.tm},
            "budget": {"tap": self.budget.tap_observed, "tas_limit": self.budget.tas_limit,
                       "tam_limit": self.budget.tam_limit},
            "private": {"sets": h.private.sets, "assoc": h.private.assoc,
                        "block": h.private.block_bytes, "capacity": h.private.capacity},
            "shared": {"sets": h.shared.sets, "assoc": h.shared.assoc,
                       "block": h.shared.block_bytes, "capacity": h.shared.capacity},
            "hierarchy_capacity": h.capacity,
            "counts": {"tap": self.counts.tap, "tas": self.counts.tas, "tam": self.counts.tam},
            "tam_prime": self.tam_prime,
            "amt_ns": self.amt_ns,
            "configs": {"private_simulated": p_sim, "private_excluded": p_excl,
                        "shared_simulated": s_sim, "shared_excluded": s_excl},
            "private_cached": self.private_cached,
            "shared_cached": self.shared_cached,
        }


def _finish(trace, budget, pres, pcfg, tam_prime, sres, params, deadline, started,
            private_cached=False, shared_cached=False):
    scfg = select_shared(sres, tam_prime)
    counts = AccessCounts(pres.tap_observed, pres.tas_prime(pcfg), sres.tam_double_prime(scfg))
    total = amt(counts, params)
    assert total <= deadline.wcdmot, "selected hierarchy misses the deadline"
    return SelectionReport(
        HierarchyConfig(pcfg, scfg, pres.processor_count), budget, counts, total,
        deadline, params, tam_prime, pres, sres, private_cached, shared_cached,
        time.perf_counter() - started, trace)


def select_hierarchy(trace, private_space: DesignSpace, shared_space: DesignSpace,
                     params: TimingParams, deadline: Deadline, processor_count=None,
                     predictor=predict_budgets) -> SelectionReport:
    """Smallest two-level hierarchy meeting ``deadline``; see module docstring."""
    started = time.perf_counter()
    if private_space.block_bytes != shared_space.block_bytes:
        raise ValueError("private and shared spaces must share one block size")
    budget = predictor(trace, params, deadline)
    pres = simulate_private(trace, private_space, processor_count, budget.tas_limit)
    pcfg, tam_prime = select_private(pres, budget, params, deadline)
    secondary = emit_secondary_trace(trace, pcfg, processor_count)
    sres = simulate_shared(secondary, shared_space, tam_prime)
    return _finish(trace, budget, pres, pcfg, tam_prime, sres, params, deadline, started)


def reselect(report: SelectionReport, new_deadline: Deadline, trace=None) -> SelectionReport:
    """Re-decide for a tighter deadline without re-running the private simulation.

    ``trace`` is only read when the private choice changes (to emit the new
    miss stream); it defaults to the trace the report was built from.
    """
    started = time.perf_counter()
    if new_deadline.wcdmot > report.deadline.wcdmot:
        raise RequiresFullRun(
            f"new deadline {new_deadline.wcdmot} ns is looser than the cached "
            f"{report.deadline.wcdmot} ns; cached private counts may be incomplete")
    params = report.params
    pres = report.private_result
    budget = budget_from_tap(pres.tap_observed, params, new_deadline)
    pcfg, tam_prime = select_private(pres, budget, params, new_deadline)
    sres = report.shared_result
    limit = sres.miss_limit
    if pcfg == sres.private and (limit is None or limit >= tam_prime):
        return _finish(report.trace, budget, pres, pcfg, tam_prime, sres, params,
                       new_deadline, started, private_cached=True, shared_cached=True)
    trace = report.trace if trace is None else trace
    if trace is None:
        raise RequiresFullRun("private choice changed and no trace is available to re-emit misses")
    if trace.digest() != pres.trace_digest:
        raise StaleCache("trace does not match the cached private results")
    secondary = emit_secondary_trace(trace, pcfg)
    sres = simulate_shared(secondary, report.shared_space, tam_prime)
    return _finish(trace, budget, pres, pcfg, tam_prime, sres, params, new_deadline,
                   started, private_cached=True)


# -- cache file --------------------------------------------------------------

def _cfg(c: CacheConfig):
    return [c.sets, c.assoc, c.block_bytes]


def save_cache(report: SelectionReport, path):
    bundle = {
        "format": CACHE_FORMAT,
        "version": CACHE_VERSION,
        "trace_digest": report.private_result.trace_digest,
        "params": {"tp": report.params.tp, "ts": report.params.ts, "tm": report.params.tm},
        "wcdmot_ns": report.deadline.wcdmot,
        "budget": [report.budget.tap_observed, report.budget.tas_limit, report.budget.tam_limit],
        "chosen_private": _cfg(report.hierarchy.private),
        "chosen_shared": _cfg(report.hierarchy.shared),
        "tam_prime": report.tam_prime,
        "counts": [report.counts.tap, report.counts.tas, report.counts.tam],
        "private_result": report.private_result.to_dict(),
        "secondary_digest": report.shared_result.secondary_digest,
        "shared_result": report.shared_result.to_dict(),
    }
    with open(path, "w", encoding="utf-8") as f:
        json.dump(bundle, f, sort_keys=True)
        f.write("\n")


def load_cache(path, trace=None) -> SelectionReport:
    """Rebuild a report from a cache file; checks it belongs to ``trace``."""
    try:
        with open(path, encoding="utf-8") as f:
            d = json.load(f)
    except (OSError, ValueError) as e:
        raise StaleCache(f"cannot read cache file {path}: {e}") from None
    if d.get("format") != CACHE_FORMAT or d.get("version") != CACHE_VERSION:
        raise StaleCache(f"{path} is not a version-{CACHE_VERSION} {CACHE_FORMAT} file")
    if trace is not None and trace.digest() != d["trace_digest"]:
        raise StaleCache(f"{path} was produced from a different trace")
    pres = PrivateSimResult.from_dict(d["private_result"])
    sres = SharedSimResult.from_dict(d["shared_result"])
    if pres.trace_digest != d["trace_digest"] or sres.trace_digest != d["trace_digest"]:
        raise StaleCache(f"{path} is internally inconsistent")
    params = TimingParams(**d["params"])
    hierarchy = HierarchyConfig(CacheConfig(*d["chosen_private"]),
                                CacheConfig(*d["chosen_shared"]), pres.processor_count)
    counts = AccessCounts(*d["counts"])
    return SelectionReport(hierarchy, PerfBudget(*d["budget"]), counts, amt(counts, params),
                           Deadline(d["wcdmot_ns"]), params, d["tam_prime"], pres, sres,
                           trace=trace)
