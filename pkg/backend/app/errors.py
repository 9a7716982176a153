"""
FracAAA - Error Types

Shared exception hierarchy. Module-specific errors subclass these in the
module that raises them.
"""

from typing import Optional


class FracAAAError(Exception):
    """Base exception for all numerical failures raised by the library."""

    pass


class DomainError(FracAAAError, ValueError):
    """Raised when a parameter lies outside its mathematical domain."""

    pass


class InputError(FracAAAError, ValueError):
    """Raised for malformed samples, shape mismatches or non-finite data."""

    pass


class InsufficientDataError(InputError):
    """Raised when a sampled path has too few nodes for an operation."""

    pass


class CoverageError(FracAAAError, ValueError):
    """Raised when a path does not cover a requested time range."""

    def __init__(self, message: str, required_extension: Optional[float] = None):
        super().__init__(message)
        self.required_extension = required_extension


class BudgetError(FracAAAError):
    """Raised when a truncation error budget cannot be met."""

    pass


class ConfigurationError(FracAAAError, ValueError):
    """Raised for invalid scenario configuration."""

    pass
