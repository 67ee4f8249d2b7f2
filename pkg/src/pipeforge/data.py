"""Column-typed tables with explicit missing-value masks.

A :class:`DataTable` is an immutable, ordered collection of :class:`Column`
objects.  Numeric columns hold float64 values, categorical columns hold
integer codes into a per-column dictionary of symbols.  Missing cells are
flagged in ``na_mask``; the stored value under a masked cell is meaningless
(0.0 for numeric, -1 for categorical codes).
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np


class DataError(ValueError):
    """Raised for malformed input data."""


class Kind(str, Enum):
    CATEGORICAL = "Categorical"
    NUMERIC = "Numeric"


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True, eq=False)
class Column:
    name: str
    kind: Kind
    data: np.ndarray
    na_mask: np.ndarray
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        data = np.asarray(self.data)
        mask = np.asarray(self.na_mask, dtype=bool)
        if data.ndim != 1 or mask.shape != data.shape:
            raise DataError(f"column {self.name!r}: data and na_mask must be 1-D of equal length")
        if self.kind is Kind.NUMERIC:
            data = np.where(mask, 0.0, data.astype(np.float64, copy=False))
            if not np.all(np.isfinite(data)):
                raise DataError(f"column {self.name!r}: non-finite numeric cell")
        else:
            data = np.where(mask, -1, data.astype(np.int32, copy=False)).astype(np.int32)
            if np.any(data[~mask] < 0) or np.any(data[~mask] >= len(self.categories)):
                raise DataError(f"column {self.name!r}: category code out of range")
        object.__setattr__(self, "data", _frozen(data))
        object.__setattr__(self, "na_mask", _frozen(mask))
        object.__setattr__(self, "categories", tuple(self.categories))

    @classmethod
    def numeric(cls, name: str, values, na_mask=None) -> "Column":
        values = np.asarray(values, dtype=np.float64)
        if na_mask is None:
            na_mask = ~np.isfinite(values)
        values = np.where(na_mask, 0.0, values)
        return cls(name, Kind.NUMERIC, values, na_mask)

    @classmethod
    def categorical(cls, name: str, values: Sequence, na_mask=None) -> "Column":
        """Build a categorical column; ``None`` cells are missing.

        The dictionary is built in first-appearance order.
        """
        n = len(values)
        if na_mask is None:
            na_mask = np.array([v is None for v in values], dtype=bool)
        else:
            na_mask = np.asarray(na_mask, dtype=bool)
        index: dict[str, int] = {}
        codes = np.full(n, -1, dtype=np.int32)
        for i, v in enumerate(values):
            if na_mask[i]:
                continue
            codes[i] = index.setdefault(str(v), len(index))
        return cls(name, Kind.CATEGORICAL, codes, na_mask, tuple(index))

    def __len__(self) -> int:
        return self.data.shape[0]

    @property
    def is_numeric(self) -> bool:
        return self.kind is Kind.NUMERIC

    @property
    def na_count(self) -> int:
        return int(self.na_mask.sum())

    def cells(self) -> list:
        """Decoded cell values, ``None`` where missing."""
        if self.is_numeric:
            return [None if m else float(v) for v, m in zip(self.data, self.na_mask)]
        cats = self.categories
        return [None if m else cats[c] for c, m in zip(self.data, self.na_mask)]

    def labels(self) -> np.ndarray:
        """Decoded categorical symbols as a string array ('' where missing)."""
        lookup = np.array(self.categories + ("",), dtype=object)
        return lookup[self.data].astype(str)

    def take(self, rows: np.ndarray) -> "Column":
        return Column(self.name, self.kind, self.data[rows], self.na_mask[rows], self.categories)

    def rename(self, name: str) -> "Column":
        return Column(name, self.kind, self.data, self.na_mask, self.categories)

    def equals(self, other: "Column") -> bool:
        return (
            self.name == other.name
            and self.kind is other.kind
            and self.cells() == other.cells()
        )


@dataclass(frozen=True, eq=False)
class DataTable:
    columns: tuple[Column, ...]
    n_rows: int = field(default=-1)

    def __post_init__(self):
        cols = tuple(self.columns)
        n = self.n_rows
        if n < 0:
            if not cols:
                raise DataError("n_rows is required for a table without columns")
            n = len(cols[0])
        names = set()
        for col in cols:
            if len(col) != n:
                raise DataError(f"column {col.name!r} has {len(col)} cells, expected {n}")
            if col.name in names:
                raise DataError(f"duplicate column name {col.name!r}")
            names.add(col.name)
        object.__setattr__(self, "columns", cols)
        object.__setattr__(self, "n_rows", n)

    @classmethod
    def from_numeric(cls, matrix, names: Sequence[str] | None = None) -> "DataTable":
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise DataError("expected a 2-D matrix")
        if names is None:
            names = [f"x{j + 1}" for j in range(matrix.shape[1])]
        cols = [Column.numeric(nm, matrix[:, j]) for j, nm in enumerate(names)]
        return cls(tuple(cols), matrix.shape[0])

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    @property
    def n_cols(self) -> int:
        return len(self.columns)

    @property
    def shape(self) -> tuple[int, int]:
        return self.n_rows, self.n_cols

    @property
    def na_count(self) -> int:
        return sum(c.na_count for c in self.columns)

    def __getitem__(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise KeyError(name)

    def select(self, kind: Kind) -> "DataTable":
        return DataTable(tuple(c for c in self.columns if c.kind is kind), self.n_rows)

    def take_rows(self, rows) -> "DataTable":
        rows = np.asarray(rows)
        if rows.dtype == bool:
            rows = np.flatnonzero(rows)
        return DataTable(tuple(c.take(rows) for c in self.columns), len(rows))

    def drop(self, names: Iterable[str]) -> "DataTable":
        names = set(names)
        return DataTable(tuple(c for c in self.columns if c.name not in names), self.n_rows)

    def is_numeric(self) -> bool:
        return all(c.is_numeric for c in self.columns)

    def to_matrix(self) -> np.ndarray:
        """Numeric cells as an (n_rows, n_cols) float64 matrix."""
        if not self.is_numeric():
            bad = [c.name for c in self.columns if not c.is_numeric]
            raise DataError(f"categorical columns in numeric context: {bad}")
        if not self.columns:
            return np.zeros((self.n_rows, 0))
        return np.column_stack([c.data for c in self.columns])

    def row_na_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_rows, dtype=bool)
        for c in self.columns:
            mask |= c.na_mask
        return mask

    def equals(self, other: "DataTable") -> bool:
        return (
            self.n_rows == other.n_rows
            and self.n_cols == other.n_cols
            and all(a.equals(b) for a, b in zip(self.columns, other.columns))
        )

    def __repr__(self) -> str:
        kinds = ", ".join(f"{c.name}:{c.kind.value}" for c in self.columns[:8])
        more = ", ..." if self.n_cols > 8 else ""
        return f"DataTable({self.n_rows}x{self.n_cols}; {kinds}{more})"


class TargetVector:
    """Categorical class labels with a sorted class set."""

    def __init__(self, labels):
        arr = np.asarray(labels)
        if arr.dtype.kind == "f":
            if not np.all(np.isfinite(arr)):
                raise DataError("target contains missing entries")
            if not np.all(arr == np.round(arr)):
                raise DataError("numeric targets are not supported; labels must be categorical")
            arr = arr.astype(np.int64)
        labels = arr.astype(str)
        if arr.dtype == object and any(v is None for v in arr):
            raise DataError("target contains missing entries")
        self.labels = _frozen(labels)
        self.class_set: tuple[str, ...] = tuple(sorted(set(labels.tolist())))
        index = {c: i for i, c in enumerate(self.class_set)}
        self.codes = _frozen(np.array([index[v] for v in labels.tolist()], dtype=np.int64))

    def __len__(self) -> int:
        return len(self.labels)

    @property
    def n_classes(self) -> int:
        return len(self.class_set)

    def take(self, rows) -> "TargetVector":
        return TargetVector(self.labels[np.asarray(rows)])

    def __eq__(self, other) -> bool:
        return isinstance(other, TargetVector) and np.array_equal(self.labels, other.labels)

    def __repr__(self) -> str:
        return f"TargetVector(n={len(self)}, classes={list(self.class_set)})"


def hconcat(left: DataTable, right: DataTable) -> DataTable:
    """Feature union: columns of ``left`` followed by those of ``right``.

    A right-hand name that collides with an existing name becomes
    ``name_1``, ``name_2``, ... (first unused index).
    """
    if left.n_rows != right.n_rows:
        raise DataError(f"row-count mismatch in union: {left.n_rows} vs {right.n_rows}")
    used = set(left.names) | set(right.names)
    taken = set(left.names)
    cols = list(left.columns)
    for col in right.columns:
        name = col.name
        if name in taken:
            i = 1
            while f"{name}_{i}" in used:
                i += 1
            name = f"{name}_{i}"
            used.add(name)
            col = col.rename(name)
        taken.add(name)
        cols.append(col)
    return DataTable(tuple(cols), left.n_rows)


def _parse_real(cell: str) -> float | None:
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def load_csv(
    path: str | os.PathLike,
    target_name: str,
    schema_hint: Mapping[str, Kind | str] | None = None,
) -> tuple[DataTable, TargetVector]:
    """Read a headed CSV file into a feature table and a target vector.

    Without a hint, a column is numeric iff every non-empty cell parses as a
    finite real number.  Empty cells are missing.
    """
    if not os.path.isfile(path):
        raise FileNotFoundError(f"no such data file: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DataError(f"{path}: missing header row")
    header, body = rows[0], rows[1:]
    if len(set(header)) != len(header):
        raise DataError(f"{path}: duplicate column names in header")
    if target_name not in header:
        raise DataError(f"{path}: target column {target_name!r} not found")
    for lineno, row in enumerate(body, start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
    hint = {k: Kind(v) for k, v in (schema_hint or {}).items()}
    unknown = set(hint) - set(header)
    if unknown:
        raise DataError(f"{path}: schema hint names unknown columns {sorted(unknown)}")

    columns = []
    target = None
    for j, name in enumerate(header):
        cells = [row[j] for row in body]
        if name == target_name:
            if hint.get(name) is Kind.NUMERIC:
                raise DataError("numeric targets are not supported; labels must be categorical")
            if any(c == "" for c in cells):
                raise DataError(f"{path}: target column {target_name!r} has empty cells")
            target = TargetVector(np.array(cells, dtype=str))
            continue
        columns.append(_column_from_cells(name, cells, hint.get(name), path))
    return DataTable(tuple(columns), len(body)), target


def _column_from_cells(name: str, cells: list[str], kind: Kind | None, path) -> Column:
    mask = np.array([c == "" for c in cells], dtype=bool)
    parsed = [None if m else _parse_real(c) for c, m in zip(cells, mask)]
    if kind is None:
        kind = Kind.NUMERIC if all(p is not None for p, m in zip(parsed, mask) if not m) else Kind.CATEGORICAL
    if kind is Kind.NUMERIC:
        bad = [c for c, p, m in zip(cells, parsed, mask) if not m and p is None]
        if bad:
            raise DataError(f"{path}: column {name!r} hinted numeric but has cell {bad[0]!r}")
        values = np.array([0.0 if p is None else p for p in parsed])
        return Column(name, Kind.NUMERIC, values, mask)
    return Column.categorical(name, [None if m else c for c, m in zip(cells, mask)], mask)


def write_csv(path: str | os.PathLike, table: DataTable, target: TargetVector | None = None,
              target_name: str = "class") -> None:
    """Write a table (and optional target as the last column); missing cells are empty."""
    header = table.names + ([target_name] if target is not None else [])
    cols = [c.cells() for c in table.columns]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for i in range(table.n_rows):
            row = ["" if col[i] is None else (repr(col[i]) if isinstance(col[i], float) else col[i])
                   for col in cols]
            if target is not None:
                row.append(target.labels[i])
            writer.writerow(row)
