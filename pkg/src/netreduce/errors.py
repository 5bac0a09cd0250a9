"""Exception types shared across the package.

Every error raised deliberately by this package derives from
:class:`NetreduceError`, so callers can catch one type at the boundary.
"""

from __future__ import annotations

__all__ = [
    "NetreduceError",
    "InvalidParameterError",
    "EdgeListError",
    "ParseError",
    "InvalidWeightError",
    "NoEdgesError",
    "DomainError",
    "NonFiniteStateError",
    "StepSizeError",
    "DegenerateOperatorError",
    "FitError",
    "NoRootError",
    "NoDataError",
    "ConfigError",
]


class NetreduceError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(NetreduceError, ValueError):
    """A size, rate, probability, or other argument is out of range."""


class EdgeListError(NetreduceError, ValueError):
    """Problem in an edge-list stream.  Carries the 1-based line number."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class ParseError(EdgeListError):
    """A line of an edge list could not be tokenized."""


class InvalidWeightError(EdgeListError):
    """An edge weight is negative."""


class NoEdgesError(NetreduceError, ValueError):
    """An operation that needs at least one edge got an empty graph."""


class DomainError(NetreduceError, ValueError):
    """A state vector left the admissible domain of the dynamics."""


class NonFiniteStateError(NetreduceError, ArithmeticError):
    """The integrator produced a NaN or infinity."""


class StepSizeError(NetreduceError, ArithmeticError):
    """Adaptive step-size control shrank the step below the floor."""


class DegenerateOperatorError(NetreduceError, ZeroDivisionError):
    """The weighting vector of the projection operator sums to zero."""


class FitError(NetreduceError, ValueError):
    """Polynomial interpolation failed (non-finite samples or bad domain)."""


class NoRootError(NetreduceError, ValueError):
    """No fixed point was found on the scanned interval."""


class NoDataError(NetreduceError, ValueError):
    """A statistics routine received an empty collection."""


class ConfigError(NetreduceError, ValueError):
    """A configuration document is malformed or contains unknown keys."""
