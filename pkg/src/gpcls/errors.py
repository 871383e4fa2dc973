"""Exception hierarchy.

Errors deriving from :class:`NumericalError` signal a numerical failure (CLI
exit code 2); the rest signal invalid input.
"""


class GpcError(Exception):
    """Base class for all package errors."""


class NumericalError(GpcError):
    """A computation failed for numerical reasons."""


class DomainError(GpcError, ValueError):
    pass


class DegreeTooLarge(GpcError, ValueError):
    pass


class OrderTooLarge(GpcError, ValueError):
    pass


class DimensionMismatch(GpcError, ValueError):
    pass


class MissingExplicitEntry(GpcError, KeyError):
    pass


class ShapeMismatch(GpcError, ValueError):
    pass


class TargetTooSmall(GpcError, ValueError):
    pass


class DegenerateInput(GpcError, ValueError):
    pass


class NonConvergent(NumericalError):
    pass


class SetTooLarge(NumericalError):
    pass


class TabulationFailure(NumericalError):
    pass


class IllConditionedInput(NumericalError):
    """Raised when the Gram matrix of a candidate pool is too poorly conditioned."""

    def __init__(self, message: str, lambda_min: float | None = None):
        super().__init__(message)
        self.lambda_min = lambda_min


class RankDeficient(NumericalError):
    """Raised when a least-squares system is numerically singular."""

    def __init__(self, message: str, lambda_min: float | None = None):
        super().__init__(message)
        self.lambda_min = lambda_min


class SubsamplingFailure(NumericalError):
    pass


class EllipticityViolation(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass
