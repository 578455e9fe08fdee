"""Deadline-driven selection of two-level inclusive data cache hierarchies.

Given a multiprocessor data-access trace and a worst-case data-memory-operation
time budget, find the smallest hierarchy of P identical private FIFO caches
plus one shared FIFO cache whose modeled memory time meets the budget.
"""

from .budget import PerfBudget, predict_budgets
from .errors import (CacheSelError, InfeasibleDeadline, NoFeasiblePrivate, NoFeasibleShared,
                     RequiresFullRun, StaleCache)
from .oracle import OracleOptions, exhaustive_select, simulate_hierarchy, simulate_private_only
from .private import (PrivateSimResult, SecondaryTrace, emit_secondary_trace, select_private,
                      simulate_private)
from .selector import SelectionReport, load_cache, reselect, save_cache, select_hierarchy
from .shared import SharedSimResult, select_shared, simulate_shared
from .space import (CacheConfig, DesignSpace, HierarchyConfig, capacity, default_space,
                    enumerate_space, hierarchy_capacity)
from .timing import AccessCounts, Deadline, TimingParams, amt, feasible, max_tam
from .trace import (AccessRecord, Op, SyntheticTraceSpec, Trace, block_of, count_tap,
                    generate_synthetic, parse_trace, read_trace, render)

__version__ = "0.1.0"
