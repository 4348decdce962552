"""Semantic exceptions and warnings shared across the package."""

from __future__ import annotations


class PathregError(Exception):
    """Base error for this package."""


class EmptyTable(PathregError):
    """A contingency table with zero total count where data is required."""


class WrongShape(PathregError):
    """Dataset shape or encoding does not match the operation's contract."""


class ParseError(PathregError):
    """Malformed table CSV; carries the offending row number when known."""

    def __init__(self, message: str, row: int | None = None) -> None:
        self.row = row
        if row is not None:
            message = f"row {row}: {message}"
        super().__init__(message)


class NegativeCount(PathregError):
    """A contingency-table cell count is negative."""


class DegenerateDataset(PathregError):
    """Only one response class present; classification fit is undefined."""


class FoldDegenerate(PathregError):
    """A stratified split cannot place both classes in every training fold."""


class RejectionBudgetExceeded(PathregError):
    """A rejection-sampling loop hit its draw budget before accepting."""


class InsufficientPathologicalDraws(PathregError):
    """Too few pathological datasets to estimate a conditional mean."""


class IndexOutOfRange(PathregError, IndexError):
    """A 1-based variable index does not address any model component."""


class GridTooCoarse(UserWarning):
    """Grid scan resolution disagrees with the exact sign-change count."""


class DegenerateDesign(UserWarning):
    """Singular Gram matrix at c=0; minimum-norm limit used instead."""
