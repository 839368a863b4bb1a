"""
Error types for Facet.

Each error carries the process exit code the CLI maps it to:
2 for configuration problems, 3 for data problems, 4 for numerical aborts.

Author: Facet Development
"""

from typing import Any, Optional


class FacetError(Exception):
    """Base class for all Facet errors."""

    exit_code: int = 1


class ConfigError(FacetError, ValueError):
    """Invalid or inconsistent run configuration."""

    exit_code = 2


class DataError(FacetError, ValueError):
    """Dataset content or layout violates the expected format."""

    exit_code = 3


class NumericalAbort(FacetError, RuntimeError):
    """
    Training produced a non-finite loss.

    Attributes:
        report: The partially filled step report at the time of the abort
        iteration: Training iteration at which the abort happened (if known)
    """

    exit_code = 4

    def __init__(self, message: str, report: Any = None, iteration: Optional[int] = None):
        super().__init__(message)
        self.report = report
        self.iteration = iteration
