"""Exception hierarchy shared by every module."""

from __future__ import annotations


class VWLassoError(Exception):
    """Base class for all errors raised by this package."""


class DimensionMismatch(VWLassoError, ValueError):
    pass


class LengthMismatch(VWLassoError, ValueError):
    pass


class ConstantColumn(VWLassoError, ValueError):
    def __init__(self, name: str):
        super().__init__(f"column {name!r} has (near) zero standard deviation")
        self.name = name


class RankDeficient(VWLassoError, ValueError):
    pass


class NotConverged(VWLassoError, RuntimeError):
    """Raised on request when coordinate descent hits its iteration cap.

    ``fit`` holds the last iterate so the caller can still use it.
    """

    def __init__(self, message: str, fit=None):
        super().__init__(message)
        self.fit = fit


class NonPositiveVariance(VWLassoError, ArithmeticError):
    pass


class SeriesTooShort(VWLassoError, ValueError):
    def __init__(self, message: str, column: str | None = None):
        super().__init__(message if column is None else f"column {column!r}: {message}")
        self.column = column


class DegenerateSeries(VWLassoError, ValueError):
    def __init__(self, message: str, column: str | None = None):
        super().__init__(message if column is None else f"column {column!r}: {message}")
        self.column = column


class SplitTooSmall(VWLassoError, ValueError):
    pass


class MissingColumn(VWLassoError, KeyError):
    def __init__(self, name: str):
        super().__init__(name)
        self.name = name

    def __str__(self) -> str:
        return f"missing column {self.name!r}"


class NonNumericCell(VWLassoError, ValueError):
    """Bad cell at 1-based (data row, file column)."""

    def __init__(self, row: int, col: int, value: str, column: str = ""):
        super().__init__(f"non-numeric cell {value!r} at row {row}, column {col} ({column})")
        self.row = row
        self.col = col
        self.value = value
        self.column = column


class NonMonotonicDates(VWLassoError, ValueError):
    def __init__(self, row: int, message: str = ""):
        super().__init__(f"dates not strictly increasing quarterly periods at row {row}" + (f": {message}" if message else ""))
        self.row = row


class EmptyAfterTransform(VWLassoError, ValueError):
    pass


class IoFailure(VWLassoError, OSError):
    pass


class ConfigError(VWLassoError, ValueError):
    pass
