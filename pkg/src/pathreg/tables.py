"""2x2x2 contingency tables, dataset encoding, and Simpson's-paradox testing.

A table holds integer counts ``d[i, j, k]`` indexed by ``(Y, X1, X2)``.  The
row-level view of the same data is a :class:`Dataset`: a response vector and
an N x 2 binary design matrix, optionally re-encoded from ``{0, 1}`` to any
positive pair ``(a, b)``.

The Simpson test is carried out in exact integer arithmetic on the counts so
that ties are classified deterministically and never depend on float rounding.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .errors import EmptyTable, NegativeCount, ParseError, WrongShape

# Cell order used everywhere: ascending lexicographic in (y, x1, x2).
CELLS: tuple[tuple[int, int, int], ...] = tuple(
    (i, j, k) for i in (0, 1) for j in (0, 1) for k in (0, 1)
)

_CSV_HEADER = ("y", "x1", "x2", "count")


def _frozen_array(values: Any, dtype: type, shape: tuple[int, ...]) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if arr.shape != shape:
        raise WrongShape(f"expected shape {shape}, got {arr.shape}")
    arr.setflags(write=False)
    return arr


class SimpsonVerdict(str, Enum):
    """Outcome of the two strict Simpson inequality systems."""

    NONE = "none"
    TYPE_A = "type_A"
    TYPE_B = "type_B"

    def __bool__(self) -> bool:
        return self is not SimpsonVerdict.NONE


@dataclass(frozen=True)
class ContingencyTable222:
    """Integer counts of a binary response against two binary features.

    ``counts[i, j, k]`` is the number of observations with ``Y = i``,
    ``X1 = j``, ``X2 = k``.  Counts must be non-negative; a table may be
    all-zero but cannot be encoded in that state.
    """

    counts: np.ndarray
    labels: Mapping[str, str] | None = None

    def __post_init__(self) -> None:
        arr = _frozen_array(self.counts, np.int64, (2, 2, 2))
        if (arr < 0).any():
            raise NegativeCount(f"negative cell count in {arr.tolist()}")
        object.__setattr__(self, "counts", arr)

    @property
    def n(self) -> int:
        """Total sample size d+++."""
        return int(self.counts.sum())

    def cell(self, i: int, j: int, k: int) -> int:
        return int(self.counts[i, j, k])

    def scaled(self, factor: int) -> "ContingencyTable222":
        if factor < 1:
            raise ValueError(f"scale factor must be >= 1, got {factor}")
        return ContingencyTable222(self.counts * factor, labels=self.labels)

    def swap_y(self) -> "ContingencyTable222":
        """Relabel the response: Y=0 and Y=1 exchanged."""
        return ContingencyTable222(self.counts[::-1].copy(), labels=self.labels)

    def probabilities(self) -> "ProbabilityTable":
        if self.n == 0:
            raise EmptyTable("cannot normalize an all-zero table")
        return ProbabilityTable(self.counts / self.n)

    def to_json(self) -> dict[str, Any]:
        doc: dict[str, Any] = {"counts": self.counts.tolist()}
        if self.labels is not None:
            doc["labels"] = dict(self.labels)
        return doc

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "ContingencyTable222":
        return cls(np.array(doc["counts"]), labels=doc.get("labels"))


@dataclass(frozen=True)
class ProbabilityTable:
    """Joint distribution of three binary variables, sum fixed to 1."""

    p: np.ndarray

    _TOL = 1e-12

    def __post_init__(self) -> None:
        arr = _frozen_array(self.p, np.float64, (2, 2, 2))
        if (arr < 0).any():
            raise ValueError(f"negative probability in {arr.tolist()}")
        total = float(arr.sum())
        if abs(total - 1.0) > self._TOL:
            raise ValueError(f"probabilities sum to {total}, expected 1")
        object.__setattr__(self, "p", arr)


@dataclass(frozen=True)
class Dataset:
    """Row-level data: response ``y`` in {a,b}^N and design ``x`` in {a,b}^(N x p).

    The default encoding is ``(0, 1)``.  Any positive pair ``(a, b)`` with
    ``a != b`` is accepted; both ``y`` and ``x`` use the same pair.
    """

    y: np.ndarray
    x: np.ndarray
    encoding: tuple[float, float] = (0.0, 1.0)

    def __post_init__(self) -> None:
        a, b = float(self.encoding[0]), float(self.encoding[1])
        if a == b:
            raise ValueError("encoding values must differ")
        if a < 0 or b < 0:
            raise ValueError("encoding values must be non-negative")
        integral = float(a).is_integer() and float(b).is_integer()
        dtype = np.int64 if integral else np.float64
        y = np.array(self.y, dtype=dtype).reshape(-1)
        x = np.array(self.x, dtype=dtype)
        if x.ndim != 2:
            raise WrongShape(f"design matrix must be 2-d, got {x.ndim}-d")
        if y.shape[0] != x.shape[0]:
            raise WrongShape(f"{y.shape[0]} responses for {x.shape[0]} design rows")
        if y.shape[0] < 1:
            raise EmptyTable("dataset has no rows")
        values = {a, b}
        if not set(np.unique(y)).issubset(values) or not set(np.unique(x)).issubset(values):
            raise WrongShape(f"entries outside the encoding pair {self.encoding}")
        y.setflags(write=False)
        x.setflags(write=False)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "encoding", (a, b))

    @property
    def n(self) -> int:
        return int(self.y.shape[0])

    @property
    def p(self) -> int:
        return int(self.x.shape[1])

    @property
    def is_binary01(self) -> bool:
        return self.encoding == (0.0, 1.0)

    def bits(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (y, x) mapped back to {0, 1} integers."""
        a, b = self.encoding
        return (
            np.where(self.y == b, 1, 0).astype(np.int64),
            np.where(self.x == b, 1, 0).astype(np.int64),
        )


def encode(
    table: ContingencyTable222, encoding: tuple[float, float] = (0.0, 1.0)
) -> Dataset:
    """Expand a table into rows, ascending lexicographic in (y, x1, x2).

    Cell (i, j, k) with count d contributes d rows with response i and design
    row (j, k).  The fixed row order makes encodings bit-reproducible.
    """
    if table.n == 0:
        raise EmptyTable("cannot encode a table with zero total count")
    a, b = encoding
    rows = []
    ys = []
    for (i, j, k) in CELLS:
        d = table.cell(i, j, k)
        if d:
            ys.append(np.full(d, i, dtype=np.int64))
            rows.append(np.tile([j, k], (d, 1)))
    y01 = np.concatenate(ys)
    x01 = np.concatenate(rows, axis=0)
    values = np.array([a, b])
    return Dataset(values[y01], values[x01], encoding=encoding)


def decode(ds: Dataset) -> ContingencyTable222:
    """Invert :func:`encode`; requires two features and the (0, 1) encoding."""
    if ds.p != 2:
        raise WrongShape(f"decode needs p = 2, got p = {ds.p}")
    if not ds.is_binary01:
        raise WrongShape(f"decode needs the (0, 1) encoding, got {ds.encoding}")
    idx = 4 * ds.y + 2 * ds.x[:, 0] + ds.x[:, 1]
    counts = np.bincount(idx, minlength=8).reshape(2, 2, 2)
    return ContingencyTable222(counts)


def counts_from_bits(y01: np.ndarray, x01: np.ndarray) -> np.ndarray:
    """Cell counts (2,2,2) from {0,1} arrays, without building a Dataset."""
    idx = 4 * y01 + 2 * x01[:, 0] + x01[:, 1]
    return np.bincount(idx, minlength=8).reshape(2, 2, 2)


def is_simpson(table: ContingencyTable222) -> SimpsonVerdict:
    """Classify a table against the two strict Simpson inequality systems.

    With empirical probabilities p_ijk = d_ijk / N, type A requires

        p101*p+00 - p100*p+01 < 0
        p111*p+10 - p110*p+11 < 0
        p1+1*p++0 - p1+0*p++1 > 0

    all strictly, and type B the same three with every inequality flipped.
    Each product is degree two in the p's, so multiplying through by N^2
    turns the test into exact integer comparisons on the counts; any tie
    fails strictness and the verdict is NONE.
    """
    if table.n == 0:
        raise EmptyTable("Simpson test needs at least one observation")
    d = table.counts
    # Python ints: exact products regardless of magnitude.
    d101, d100 = int(d[1, 0, 1]), int(d[1, 0, 0])
    d111, d110 = int(d[1, 1, 1]), int(d[1, 1, 0])
    dp00 = int(d[:, 0, 0].sum())
    dp01 = int(d[:, 0, 1].sum())
    dp10 = int(d[:, 1, 0].sum())
    dp11 = int(d[:, 1, 1].sum())
    d1p1 = int(d[1, :, 1].sum())
    d1p0 = int(d[1, :, 0].sum())
    dpp0 = dp00 + dp10
    dpp1 = dp01 + dp11

    t1 = d101 * dp00 - d100 * dp01
    t2 = d111 * dp10 - d110 * dp11
    t3 = d1p1 * dpp0 - d1p0 * dpp1

    if t1 < 0 and t2 < 0 and t3 > 0:
        return SimpsonVerdict.TYPE_A
    if t1 > 0 and t2 > 0 and t3 < 0:
        return SimpsonVerdict.TYPE_B
    return SimpsonVerdict.NONE


def simpson_types_from_counts(counts8: np.ndarray) -> np.ndarray:
    """Vectorized Simpson verdicts for a (B, 8) array of cell counts.

    Columns follow the flattened (y, x1, x2) cell order.  Returns int8 codes:
    0 = none, 1 = type A, 2 = type B.  Counts must be small enough that the
    degree-two products stay inside int64 (N below ~1.5e9).
    """
    d = np.asarray(counts8, dtype=np.int64)
    d100, d101, d110, d111 = d[:, 4], d[:, 5], d[:, 6], d[:, 7]
    dp00 = d[:, 0] + d100
    dp01 = d[:, 1] + d101
    dp10 = d[:, 2] + d110
    dp11 = d[:, 3] + d111
    d1p1 = d101 + d111
    d1p0 = d100 + d110
    dpp0 = dp00 + dp10
    dpp1 = dp01 + dp11
    t1 = d101 * dp00 - d100 * dp01
    t2 = d111 * dp10 - d110 * dp11
    t3 = d1p1 * dpp0 - d1p0 * dpp1
    out = np.zeros(d.shape[0], dtype=np.int8)
    out[(t1 < 0) & (t2 < 0) & (t3 > 0)] = 1
    out[(t1 > 0) & (t2 > 0) & (t3 < 0)] = 2
    return out


def write_table_csv(table: ContingencyTable222, path: str | Path) -> None:
    """Write the 8-cell CSV form: header ``y,x1,x2,count``, one row per cell."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(_CSV_HEADER)
        for (i, j, k) in CELLS:
            writer.writerow([i, j, k, table.cell(i, j, k)])


def read_table_csv(path: str | Path) -> ContingencyTable222:
    """Read the ``y,x1,x2,count`` cell format.

    Cells absent from the file default to 0; a cell listed twice is rejected.
    The total count is always recomputed from the rows.
    """
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError("empty file") from None
        if [h.strip().lower() for h in header] != list(_CSV_HEADER):
            raise ParseError(f"expected header {','.join(_CSV_HEADER)}", row=1)
        counts = np.zeros((2, 2, 2), dtype=np.int64)
        seen: set[tuple[int, int, int]] = set()
        for row_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != 4:
                raise ParseError(f"expected 4 fields, got {len(row)}", row=row_no)
            try:
                i, j, k, d = (int(cell) for cell in row)
            except ValueError:
                raise ParseError(f"non-integer field in {row!r}", row=row_no) from None
            if not all(v in (0, 1) for v in (i, j, k)):
                raise ParseError(f"cell index out of {{0,1}} in {row!r}", row=row_no)
            if d < 0:
                raise NegativeCount(f"row {row_no}: negative count {d}")
            if (i, j, k) in seen:
                raise ParseError(f"duplicate cell ({i},{j},{k})", row=row_no)
            seen.add((i, j, k))
            counts[i, j, k] = d
    return ContingencyTable222(counts)


def table_to_json_str(table: ContingencyTable222) -> str:
    return json.dumps(table.to_json(), sort_keys=True)
