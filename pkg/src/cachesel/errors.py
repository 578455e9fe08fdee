"""Exception hierarchy.

Every error carries a short upper-case ``code`` so the command line can
print a single machine-parseable reason line.
"""


class CacheSelError(Exception):
    code = "ERROR"


# -- trace input -------------------------------------------------------------

class TraceError(CacheSelError, ValueError):
    code = "TRACE_ERROR"

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MalformedLine(TraceError):
    code = "MALFORMED_LINE"


class NonMonotonicCycle(TraceError):
    code = "NON_MONOTONIC_CYCLE"


class DuplicateProcessorCycle(TraceError):
    code = "DUPLICATE_PROCESSOR_CYCLE"


class ProcessorOutOfRange(TraceError):
    code = "PROCESSOR_OUT_OF_RANGE"


class InvalidBlockSize(CacheSelError, ValueError):
    code = "INVALID_BLOCK_SIZE"


class InvalidSpec(CacheSelError, ValueError):
    code = "INVALID_SPEC"


class InvalidConfig(CacheSelError, ValueError):
    code = "INVALID_CONFIG"


# -- simulation --------------------------------------------------------------

class EmptySpace(CacheSelError, ValueError):
    code = "EMPTY_SPACE"


class ProcessorMismatch(CacheSelError, ValueError):
    code = "PROCESSOR_MISMATCH"


# -- selection ---------------------------------------------------------------

class SelectionError(CacheSelError):
    """A pipeline stage found nothing that meets the deadline."""

    code = "SELECTION_FAILED"
    stage = None

    def __str__(self):
        msg = super().__str__()
        return f"stage={self.stage}: {msg}" if self.stage else msg


class InfeasibleDeadline(SelectionError):
    code = "INFEASIBLE_DEADLINE"
    stage = "budget"


class NoFeasiblePrivate(SelectionError):
    code = "NO_FEASIBLE_PRIVATE"
    stage = "private"


class NoFeasibleShared(SelectionError):
    code = "NO_FEASIBLE_SHARED"
    stage = "shared"


class RequiresFullRun(CacheSelError):
    code = "REQUIRES_FULL_RUN"


class StaleCache(CacheSelError):
    code = "STALE_CACHE"
