"""Exception hierarchy shared by all modules."""


class CoincclError(Exception):
    """Base class for package errors."""


class ValidationError(CoincclError, ValueError):
    """Input violates a documented invariant or precondition."""


class ParseError(ValidationError):
    """Malformed input file; carries the offending line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class RangeError(ValidationError):
    """A query lies outside the tabulated domain (no extrapolation)."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of a function."""


class ConfigError(ValidationError):
    """Invalid run or generator configuration."""


class NumericalError(CoincclError, ArithmeticError):
    """A numerical routine failed (singular system, no convergence)."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach the requested tolerance.

    Attributes
    ----------
    value : float
        Best estimate obtained before giving up.
    achieved : float
        Estimated absolute error of ``value``.
    """

    def __init__(self, message, value=None, achieved=None):
        self.value = value
        self.achieved = achieved
        super().__init__(f"{message} (achieved abs. error {achieved!r})")


class NoSignalError(CoincclError):
    """An estimator received no usable counts."""
