"""Exception types shared across the package."""


class SystolatticeError(Exception):
    """Base class for all package errors."""


class DegenerateLatticeError(SystolatticeError, ValueError):
    """Basis is rank deficient or too badly conditioned to work with."""


class LatticeFormatError(SystolatticeError, ValueError):
    """Malformed lattice / p-vector JSON input."""


class ReductionError(SystolatticeError):
    """LLL did not converge within its iteration cap."""


class BudgetExceededError(SystolatticeError):
    """Enumeration visited more nodes than the configured cap."""

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class OptimizerError(SystolatticeError):
    """Every start of a multi-start ascent hit its iteration cap.

    ``best`` carries the best (value, frame) pair seen so far.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
