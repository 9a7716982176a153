"""
FracAAA - Common Utilities

This module provides common utility functions used across the application
for error handling, exit codes and number formatting of result files.
"""

import math
from enum import Enum

import numpy as np
from pydantic import ValidationError

from app.errors import ConfigurationError, FracAAAError

EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_NUMERICAL_FAILURE = 2


def exit_code_for(e: BaseException) -> int:
    """
    Map an exception raised by a scenario run to a command line exit code.

    Args:
        e: The exception to convert

    Returns:
        int: 1 for configuration errors, 2 for everything else
    """
    if isinstance(e, (ConfigurationError, ValidationError)):
        return EXIT_CONFIG_ERROR
    cause = getattr(e, "cause", None)
    if isinstance(cause, ConfigurationError):
        return EXIT_CONFIG_ERROR
    return EXIT_NUMERICAL_FAILURE


def describe_error(e: BaseException) -> str:
    """One-line description of an error for logs and reports."""
    if isinstance(e, FracAAAError):
        return f"{type(e).__name__}: {e}"
    return f"Unexpected error ({type(e).__name__}): {e}"


def format_number(value) -> str:
    """Full double precision text form of a number (17 significant digits)."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value)).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return "%.17g" % value


def jsonable(value):
    """
    Convert a nested result structure into plain JSON types.

    numpy scalars and arrays become Python numbers and lists, enums their
    values, tuples lists; non-finite floats become None so the document
    stays strict JSON.
    """
    if isinstance(value, dict):
        return {str(k): jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [jsonable(v) for v in value.tolist()]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, (complex, np.complexfloating)):
        return {"real": jsonable(value.real), "imag": jsonable(value.imag)}
    return value
