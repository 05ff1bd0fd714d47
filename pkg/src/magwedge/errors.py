"""Exception types shared by the solvers."""


class SolverError(RuntimeError):
    """An iterative or direct solve failed to meet its contract.

    ``value`` and ``residual`` carry the best estimate reached before giving
    up (``None`` when nothing usable was produced); ``trace`` holds the
    per-iteration residual history when there is one.
    """

    def __init__(self, message, value=None, residual=None, trace=None):
        super().__init__(message)
        self.value = value
        self.residual = residual
        self.trace = list(trace) if trace is not None else []


class BracketError(RuntimeError):
    """A scalar minimization did not find an interior minimum."""
