"""Exception types shared across the package."""


class InvariantViolation(RuntimeError):
    """A runtime invariant of the algorithm was violated.

    Raised when a quantity the algorithm guarantees (extracted index below
    the projector rank, monotone fixing, zero final energy) fails to hold.
    On validated commuting instances this indicates a kernel bug; on
    unvalidated input it usually means the projectors do not commute.
    """


class NodeCapExceeded(RuntimeError):
    """Exact history enumeration hit the configured node cap.

    Carries the partially built tree so callers can report partial
    statistics.
    """

    def __init__(self, message, partial_tree=None):
        super().__init__(message)
        self.partial_tree = partial_tree
