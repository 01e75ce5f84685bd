"""
Exception hierarchy for BSLab.

Every error raised by a library operation derives from :class:`BSLabError`.
The ``exit_code`` attribute is what the command-line front end returns when the
error escapes a subcommand.
"""

from __future__ import annotations

from typing import Any

EXIT_OK = 0
EXIT_VERIFICATION_FAILED = 1
EXIT_CONFIG_ERROR = 2
EXIT_NUMERIC_FAILURE = 3


class BSLabError(Exception):
    """Base class for all BSLab errors."""

    exit_code: int = EXIT_NUMERIC_FAILURE


class InvalidArgumentError(BSLabError, ValueError):
    """An argument lies outside the documented domain of an operation."""

    exit_code = EXIT_CONFIG_ERROR


class ConfigError(BSLabError, ValueError):
    """A configuration file, override or environment value is invalid."""

    exit_code = EXIT_CONFIG_ERROR


class UnsupportedError(BSLabError):
    """The requested quantity is not available for this input class."""

    exit_code = EXIT_CONFIG_ERROR


class SingularKernelError(BSLabError):
    """A kernel or special function was evaluated at its singularity."""


class NumericError(BSLabError):
    """Base class for failures of a numerical method."""

    exit_code = EXIT_NUMERIC_FAILURE


class OutOfRangeError(NumericError):
    """A value would overflow or a search left its admissible range."""


class TruncationFailureError(NumericError):
    """Partial-wave truncation did not converge below ``L_max``."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.diagnostics: dict[str, Any] = diagnostics or {}


class NumericFailureError(NumericError):
    """A dense linear-algebra kernel failed on one channel."""

    def __init__(self, message: str, channel: int | None = None) -> None:
        super().__init__(message)
        self.channel = channel


class BoundaryConflictError(NumericError):
    """A zero of the determinant lies on or next to a contour edge."""

    def __init__(self, message: str, k: complex | None = None) -> None:
        super().__init__(message)
        self.k = k


class ResolutionError(NumericError):
    """A winding number could not be resolved to an integer."""

    def __init__(self, message: str, winding: complex | None = None) -> None:
        super().__init__(message)
        self.winding = winding


class DivergentSeriesError(NumericError):
    """A series was requested outside its disc of convergence."""


class PoleError(NumericError):
    """A function was evaluated at one of its poles."""


class IllConditionedError(NumericError):
    """The evaluation point is too close to a zero for a stable quotient."""


__all__ = [
    "EXIT_OK",
    "EXIT_VERIFICATION_FAILED",
    "EXIT_CONFIG_ERROR",
    "EXIT_NUMERIC_FAILURE",
    "BSLabError",
    "InvalidArgumentError",
    "ConfigError",
    "UnsupportedError",
    "SingularKernelError",
    "NumericError",
    "OutOfRangeError",
    "TruncationFailureError",
    "NumericFailureError",
    "BoundaryConflictError",
    "ResolutionError",
    "DivergentSeriesError",
    "PoleError",
    "IllConditionedError",
]
