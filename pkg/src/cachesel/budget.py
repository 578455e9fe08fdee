"""Miss budgets predicted from the trace and deadline, before any simulation.

The private level costs at least ``tap * tp`` no matter which caches are
chosen, so whatever slack is left bounds the shared-level and memory access
counts of every feasible hierarchy. These bounds are safe: they never prune a
hierarchy that would meet the deadline.

Callers that want tighter (heuristic) predictions can pass any callable with
the :class:`BudgetPredictor` signature to the selector.
"""

from dataclasses import dataclass
from typing import Callable

from .errors import InfeasibleDeadline
from .timing import Deadline, TimingParams
from .trace import count_tap


@dataclass(frozen=True)
class PerfBudget:
    tap_observed: int
    tas_limit: int
    tam_limit: int


BudgetPredictor = Callable[[object, TimingParams, Deadline], PerfBudget]


def budget_from_tap(tap, params: TimingParams, deadline: Deadline) -> PerfBudget:
    slack = deadline.wcdmot - tap * params.tp
    if slack < 0:
        raise InfeasibleDeadline(
            f"deadline {deadline.wcdmot} ns is below the private-level floor "
            f"{tap * params.tp} ns ({tap} access cycles)")
    return PerfBudget(tap, slack // params.ts, slack // params.tm)


def predict_budgets(trace, params: TimingParams, deadline: Deadline) -> PerfBudget:
    return budget_from_tap(count_tap(trace), params, deadline)
