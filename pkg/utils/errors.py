"""Error types raised by the verifier library."""

from typing import Optional


class VerifierError(Exception):
    """Base class for all verifier errors."""


class DimensionError(VerifierError, ValueError):
    """Shapes or state dimensions do not conform."""


class ParseError(VerifierError, ValueError):
    """A problem, certificate or expression could not be parsed."""


class NormalizationError(VerifierError, ValueError):
    """A state is not a unit vector and auto-normalization is off."""


class ZeroComponentError(VerifierError, ValueError):
    """A mixed-state component has zero norm."""


class ZeroMatrixError(VerifierError, ValueError):
    """A matrix expected to be nonzero is numerically zero."""


class NumericalError(VerifierError, ArithmeticError):
    """A numerical routine failed to converge."""

    def __init__(self, message: str, attempts: Optional[int] = None):
        if attempts is not None:
            message = f"{message} (after {attempts} attempts)"
        super().__init__(message)
        self.attempts = attempts


class SizeLimitError(VerifierError):
    """An exhaustive search exceeds its configured size cap."""


class ChannelInvalidError(VerifierError):
    """A Kraus family is not trace preserving."""


class PreconditionError(VerifierError):
    """A check's precondition does not hold for the given problem."""


class DegeneracyWarning(UserWarning):
    """Repeated singular values make a Schmidt grouping non-unique."""
