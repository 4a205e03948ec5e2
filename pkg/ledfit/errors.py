"""
Error Types for ledfit

Every error raised on purpose by the package derives from LedFitError
and carries the process exit code the CLI reports for it.
"""

from dataclasses import dataclass, field
from typing import List, Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_NUMERICAL = 3


class LedFitError(Exception):
    """Base class for all ledfit errors."""

    exit_code = EXIT_INPUT


@dataclass
class PhotometryParseError(LedFitError):
    """A photometric file could not be parsed."""

    message: str
    line_no: Optional[int] = None

    def __str__(self) -> str:
        if self.line_no is None:
            return self.message
        return f"Line {self.line_no}: {self.message}"


@dataclass
class ExtractionError(LedFitError):
    """A C-plane lacks integer-degree samples between 0 and 90 degrees."""

    missing: List[float] = field(default_factory=list)
    message: str = "missing polar angles"

    def __str__(self) -> str:
        if not self.missing:
            return self.message
        angles = ", ".join(f"{a:g}" for a in self.missing)
        return f"{self.message}: {angles}"


class ConfigError(LedFitError):
    """Invalid configuration file or option value."""


class DarkInstanceError(LedFitError):
    """All measured intensities are zero, so RMSp is undefined."""

    exit_code = EXIT_NUMERICAL

    def __init__(self, message: str = "dark instance"):
        super().__init__(message)


class SingularSystemError(LedFitError):
    """The Newton system J d = R has no stable solution."""

    exit_code = EXIT_NUMERICAL


class StatisticsError(LedFitError):
    """A statistic is undefined for the given records."""

    exit_code = EXIT_NUMERICAL


class NoNonzeroPairsError(StatisticsError):
    """Every paired difference is zero."""

    def __init__(self, message: str = "no nonzero pairs"):
        super().__init__(message)
