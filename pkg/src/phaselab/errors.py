"""Exception hierarchy shared by every module.

The CLI maps :class:`DomainError` to exit status 2 and the numeric
failures to exit status 3.
"""

from __future__ import annotations


class PhaseLabError(Exception):
    """Base class for all library errors."""

    code = "error"


class DomainError(PhaseLabError, ValueError):
    """An argument lies outside the domain where the operation is defined."""

    code = "domain"


class NumericError(PhaseLabError, ArithmeticError):
    """A quadrature or root finder failed to reach its tolerance."""

    code = "numeric"


class OptimizationError(NumericError):
    """A descent run diverged or its line search broke down."""

    code = "optimization"


class ResolutionError(NumericError):
    """The grid is too coarse for the requested kernel or scale."""

    code = "resolution"


class ConfigError(DomainError):
    """A run configuration names an unknown command or key, or a bad value."""

    code = "config"
