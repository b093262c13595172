"""Exception types shared across the package.

The CLI maps each family to an exit code (usage 2, data 3, numeric 4).
"""


class UnethicalOddsError(Exception):
    """Base class for package errors."""


class DomainError(UnethicalOddsError, ValueError):
    """An argument lies outside the domain of the operation."""


class DataError(UnethicalOddsError, ValueError):
    """Malformed or insufficient input data."""


class NumericError(UnethicalOddsError, ArithmeticError):
    """A computation produced an unusable floating-point result."""


class FitError(NumericError):
    """Maximum-likelihood fitting failed to converge."""


class DegenerateTiesError(DataError):
    """A series is constant, so ranks carry no information."""


class NoDecorrelationError(UnethicalOddsError):
    """The extremogram never reaches its independence baseline."""
