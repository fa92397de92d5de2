"""Exception types shared across the package."""

from __future__ import annotations


class RankMstError(Exception):
    """Base class for all errors raised by this package."""


class CsvFormatError(RankMstError, ValueError):
    """A CSV input violates the expected layout.

    ``row`` and ``column`` locate the offending cell when known; row numbers
    are 1-based and count the header as row 1.
    """

    def __init__(self, message: str, *, row: int | None = None, column: str | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column!r}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class DataError(RankMstError, ValueError):
    """Input data violates a precondition of an operation."""


class SolverError(RankMstError, RuntimeError):
    """The portfolio solver failed to reach the required tolerance.

    Carries the best iterate found and its KKT residual so callers can
    inspect how close the run came.
    """

    def __init__(self, message: str, *, best_weights=None, residual: float | None = None):
        super().__init__(message)
        self.best_weights = best_weights
        self.residual = residual


class ConfigError(RankMstError, ValueError):
    """A run configuration is invalid."""
