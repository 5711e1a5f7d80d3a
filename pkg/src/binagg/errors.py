"""Exception types shared across the package.

Invalid arguments raise plain ValueError. The classes below mark
conditions a caller may want to handle separately: numerical failures,
degenerate bin structures, and data-loading problems.
"""

from __future__ import annotations


class BinAggError(Exception):
    """Base class for package-specific failures."""


class SingularSystemError(BinAggError):
    """A linear system is singular or too ill-conditioned to solve."""


class InsufficientBinsError(BinAggError):
    """Fewer usable bins than model coefficients."""


class EmptyResultError(BinAggError):
    """An operation produced no usable output (e.g. every bin discarded)."""


class DataLoadError(BinAggError):
    """A dataset file could not be parsed; carries row/column context."""

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column!r}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
