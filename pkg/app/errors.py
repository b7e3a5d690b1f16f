"""Exception hierarchy shared by the toolkit."""

from typing import Optional


class ExtractorError(Exception):
    """Base class for all toolkit errors."""

    def __init__(self, message: str):
        super().__init__(message)
        self.message = message


class FieldError(ExtractorError):
    """Invalid GF(2)[x] / GF(2^n) operation."""


class FamilyError(ExtractorError):
    """Malformed hash family descriptor, seed or input."""


class BudgetExceededError(ExtractorError):
    """Exhaustive enumeration would exceed the configured budget."""

    def __init__(self, required: int, budget: int):
        super().__init__("family too large to audit")
        self.required = required
        self.budget = budget


class BoundError(ExtractorError):
    """Arguments outside the domain of a bound calculator."""


class DimensionError(ExtractorError):
    """Operand shapes are incompatible."""


class NotHermitianError(ExtractorError):
    pass


class NotPositiveError(ExtractorError):
    def __init__(self, message: str = "not positive"):
        super().__init__(message)


class NotIsometryError(ExtractorError):
    pass


class SupportError(ExtractorError):
    def __init__(self, message: str = "sigma support too small"):
        super().__init__(message)


class TraceError(ExtractorError):
    """Normalization or trace-matching precondition violated."""


class EigenConvergenceError(ExtractorError):
    """Jacobi sweeps hit the iteration cap."""

    def __init__(self, residual: float, sweeps: int):
        super().__init__(f"eigensolver did not converge after {sweeps} sweeps (residual {residual:.3e})")
        self.residual = residual
        self.sweeps = sweeps


class SolverError(ExtractorError):
    """Min-entropy solver could not certify the requested gap.

    Carries the best certified bounds on the guessing probability.
    """

    def __init__(self, lower: float, upper: float, message: Optional[str] = None):
        super().__init__(message or f"duality gap not reached: lower={lower!r} upper={upper!r}")
        self.lower = lower
        self.upper = upper


class SmoothingError(ExtractorError):
    def __init__(self, distance: float, target: float):
        super().__init__(f"smoothing guarantee violated: {distance!r} > {target!r}")
        self.distance = distance
        self.target = target


class UnknownSuiteError(ExtractorError):
    def __init__(self, name: str):
        super().__init__(f"unknown suite: {name}")
        self.name = name


class PreconditionError(ExtractorError):
    """Operation called outside its documented preconditions."""
