"""Exception hierarchy shared by the solver modules."""


class CellwellError(Exception):
    """Base class for every error raised by this package."""


class ConfigurationError(CellwellError):
    """Bad input: unreadable config, invalid mesh counts, inconsistent options."""


class DomainError(CellwellError, ValueError):
    """An argument lies outside the domain where a model function is defined."""


class KineticOverflowError(CellwellError, FloatingPointError):
    """Butler-Volmer exponent exceeded the overflow guard.

    ``cell`` is the index (within the evaluated array) of the first offending
    entry, or ``None`` for scalar evaluations.
    """

    def __init__(self, message, cell=None):
        super().__init__(message)
        self.cell = cell


class AssemblyError(CellwellError):
    """Coefficients of the charge problem could not be assembled."""


class IllPosedError(CellwellError):
    """The charge problem has no solution (nonzero compatibility defect)."""

    def __init__(self, message, defect=0.0):
        super().__init__(message)
        self.defect = defect


class NonConvergenceError(CellwellError):
    """Newton iteration failed; ``history`` holds the residual max-norms."""

    def __init__(self, message, history=()):
        super().__init__(message)
        self.history = list(history)


class StepFailureError(CellwellError):
    """A transport step produced an unphysical state; retry with a smaller dt."""


class InvariantViolation(CellwellError):
    """A per-step bookkeeping check failed; ``invariant`` names it."""

    def __init__(self, invariant, message):
        super().__init__(f"{invariant}: {message}")
        self.invariant = invariant


class SimulationAbort(CellwellError):
    """A run stopped on a failure; carries the step index and a snapshot path."""

    def __init__(self, message, step, snapshot_path=None, cause=None):
        super().__init__(message)
        self.step = step
        self.snapshot_path = snapshot_path
        self.cause = cause
