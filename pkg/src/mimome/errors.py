"""Exception types shared across the package."""


class DomainError(ValueError):
    """A numerical-domain precondition failed (singular matrix, non-PSD input)."""


class ConstraintError(ValueError):
    """Antenna-count or channel-variance regime requirement violated."""


class KKTError(RuntimeError):
    """The KKT system could not be solved reliably.

    Carries a condition-number estimate of the assembled KKT matrix in
    ``condition`` (``None`` when it could not be computed).
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class LineSearchError(RuntimeError):
    """Backtracking failed to find an acceptable positive-definite step."""


class ConvergenceError(RuntimeError):
    """Iteration cap exceeded.  Carries the last solver state in ``state``."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state
