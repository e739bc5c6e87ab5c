"""Exception types shared across the package.

The CLI maps these onto distinct process exit codes, so solver code should
raise the most specific class that applies.
"""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class PolicyError(ValueError):
    """A user-supplied backoff policy violates its contract (e.g. the induced
    expected rate is not nondecreasing in the estimate)."""


class SolverError(RuntimeError):
    """A numerical routine failed to produce a usable result."""


class BracketError(SolverError):
    """A root bracket could not be established (no sign change)."""


class ConvergenceError(SolverError):
    """Iteration budget exhausted before reaching the requested tolerance.

    Carries the best iterate (and, for the backoff optimizer, the partial
    trace) so callers can inspect how far the solver got.
    """

    def __init__(self, message, best=None, trace=None):
        super().__init__(message)
        self.best = best
        self.trace = trace


class EvaluationError(SolverError):
    """An objective returned a non-finite value during a scan."""


class StarvationError(RuntimeError):
    """A simulated policy rejects probes so often that episodes would not
    terminate within the configured probe budget."""
