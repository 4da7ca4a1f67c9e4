"""In-memory column store and the chunked group-by kernel behind the
built-in engines.

Nominal columns are stored as integer codes in schema category order,
quantitative columns as float64. A query maps every row to a cell of a
dense bin grid and accumulates per-cell count, sum and sum of squares
(plus min/max when asked for) one chunk at a time.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Iterator

import numpy as np
import pandas as pd

from vizbench.config import MAX_CHUNK_ROWS
from vizbench.errors import AdapterError, SchemaError, UnknownCategoryError
from vizbench.model.filters import FilterPredicate
from vizbench.model.results import BinKey, BinValue, ResultTable
from vizbench.model.schema import FIXED_COUNT, BinningSpec, ColumnSchema, DatasetSchema
from vizbench.model.viz import VizSpec

MAX_GRID_CELLS = 20_000_000


class ColumnarTable:
    """Column-major copy of a de-normalized dataset."""

    def __init__(self, columns: dict[str, np.ndarray], schema: DatasetSchema, rows: int):
        self.columns = columns
        self.schema = schema
        self.rows = rows

    @classmethod
    def from_frame(cls, frame: pd.DataFrame, schema: DatasetSchema) -> "ColumnarTable":
        """Encode ``frame`` against ``schema``.

        Raises
        ------
        SchemaError
            If a schema column is missing from the frame, or holds a null or
            a non-numeric value where a number is expected.
        UnknownCategoryError
            If a nominal value is not among the schema's categories.
        """
        columns: dict[str, np.ndarray] = {}
        for col in schema.columns:
            if col.name not in frame.columns:
                raise SchemaError(f"Dataset has no column '{col.name}'")
            series = frame[col.name]
            missing = np.flatnonzero(series.isna().to_numpy())
            if missing.size:
                raise SchemaError(f"Column '{col.name}' has a missing value at row {missing[0]}")
            if col.is_nominal:
                values = series.astype(str)
                codes = pd.Categorical(values, categories=list(col.categories)).codes
                unknown = np.flatnonzero(codes < 0)
                if unknown.size:
                    raise UnknownCategoryError(col.name, values.iloc[unknown[0]])
                columns[col.name] = codes.astype(np.int32)
            else:
                numbers = pd.to_numeric(series, errors="coerce")
                bad = np.flatnonzero(numbers.isna().to_numpy())
                if bad.size:
                    raise SchemaError(
                        f"Column '{col.name}' has a non-numeric value {series.iloc[bad[0]]!r} at row {bad[0]}"
                    )
                columns[col.name] = numbers.to_numpy(dtype=np.float64)
        return cls(columns, schema, len(frame))

    def take(self, order: np.ndarray) -> "ColumnarTable":
        return ColumnarTable({k: v[order] for k, v in self.columns.items()}, self.schema, self.rows)

    def chunks(self, chunk_rows: int = MAX_CHUNK_ROWS, stop: int | None = None) -> Iterator[slice]:
        end = self.rows if stop is None else min(stop, self.rows)
        for start in range(0, end, chunk_rows):
            yield slice(start, min(start + chunk_rows, end))

    def mask(self, predicate: FilterPredicate, rows: slice) -> np.ndarray | None:
        """Rows of ``rows`` matching ``predicate``; ``None`` means all of them."""
        keep = None
        for atom in predicate.atoms:
            col = self.schema.column(atom.column)
            data = self.columns[atom.column][rows]
            if col.is_nominal:
                code = col.code_of(atom.value)
                cond = data == code if atom.op == "=" else data != code
            elif atom.op == "range":
                a, b = atom.value
                cond = (data >= a) & (data < b)
            elif atom.op == "<":
                cond = data < atom.value
            elif atom.op == "<=":
                cond = data <= atom.value
            elif atom.op == ">":
                cond = data > atom.value
            elif atom.op == ">=":
                cond = data >= atom.value
            else:
                raise SchemaError(f"Operator {atom.op!r} not allowed on '{atom.column}'")
            keep = cond if keep is None else keep & cond
        return keep


# ---------------------------------------------------------------------------
# Bin grid
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Axis:
    spec: BinningSpec
    column: ColumnSchema
    first: int
    size: int

    def codes(self, data: np.ndarray) -> np.ndarray:
        """Zero-based grid position of every value (same rule as ``bin_of``)."""
        col, spec = self.column, self.spec
        if col.is_nominal:
            return data.astype(np.int64)
        if spec.method == FIXED_COUNT:
            span = col.max - col.min
            if span == 0:
                return np.zeros(len(data), dtype=np.int64)
            idx = np.floor(spec.k * (data - col.min) / span)
            return np.clip(idx, 0, spec.k - 1).astype(np.int64)
        return np.floor((data - spec.reference) / spec.width).astype(np.int64) - self.first

    def key(self, position: int) -> str | int:
        if self.column.is_nominal:
            return self.column.categories[position]
        return self.first + int(position)


class BinGrid:
    """Dense row-major grid over the bins a viz can produce on a table."""

    def __init__(self, viz: VizSpec, table: ColumnarTable):
        self.axes: list[_Axis] = []
        for spec in viz.binning:
            col = table.schema.column(spec.column)
            spec.validate(table.schema)
            if col.is_nominal:
                first, size = 0, len(col.categories)
            elif spec.method == FIXED_COUNT:
                first, size = 0, spec.k
            else:
                data = table.columns[col.name]
                lo = min(col.min, float(data.min())) if data.size else col.min
                hi = max(col.max, float(data.max())) if data.size else col.max
                first = math.floor((lo - spec.reference) / spec.width)
                size = math.floor((hi - spec.reference) / spec.width) - first + 1
            self.axes.append(_Axis(spec, col, first, size))
        self.shape = tuple(a.size for a in self.axes)
        self.cells = math.prod(self.shape)
        if self.cells > MAX_GRID_CELLS:
            raise AdapterError(f"Viz '{viz.name}' spans {self.cells} bins, more than {MAX_GRID_CELLS}")

    def codes(self, table: ColumnarTable, rows: slice, keep: np.ndarray | None) -> np.ndarray:
        flat = None
        for axis, size in zip(self.axes, self.shape):
            data = table.columns[axis.column.name][rows]
            if keep is not None:
                data = data[keep]
            pos = axis.codes(data)
            flat = pos if flat is None else flat * size + pos
        return flat

    def key(self, cell: int) -> BinKey:
        positions = np.unravel_index(cell, self.shape)
        return tuple(axis.key(int(p)) for axis, p in zip(self.axes, positions))


# ---------------------------------------------------------------------------
# Accumulation
# ---------------------------------------------------------------------------


class BinAccumulator:
    """Running per-bin sums for one query."""

    def __init__(self, viz: VizSpec, table: ColumnarTable):
        self.viz = viz
        self.table = table
        self.grid = BinGrid(viz, table)
        self.function = viz.aggregate.function
        self.target = viz.aggregate.column
        size = self.grid.cells
        self.rows_seen = 0
        self.count = np.zeros(size, dtype=np.int64)
        self.sum = np.zeros(size)
        self.sumsq = np.zeros(size)
        self.min = np.full(size, np.inf) if self.function == "MIN" else None
        self.max = np.full(size, -np.inf) if self.function == "MAX" else None

    def add(self, effective: FilterPredicate, rows: slice) -> None:
        keep = self.table.mask(effective, rows)
        codes = self.grid.codes(self.table, rows, keep)
        self.rows_seen += rows.stop - rows.start
        if codes.size == 0:
            return
        size = self.grid.cells
        self.count += np.bincount(codes, minlength=size)
        if self.target is None:
            return
        values = self.table.columns[self.target][rows]
        if keep is not None:
            values = values[keep]
        self.sum += np.bincount(codes, weights=values, minlength=size)
        self.sumsq += np.bincount(codes, weights=values * values, minlength=size)
        if self.min is not None:
            np.minimum.at(self.min, codes, values)
        if self.max is not None:
            np.maximum.at(self.max, codes, values)

    def consume(
        self,
        effective: FilterPredicate,
        chunk_rows: int = MAX_CHUNK_ROWS,
        stop: int | None = None,
        should_stop: Callable[[], bool] | None = None,
    ) -> bool:
        """Accumulate rows ``[0, stop)`` chunk by chunk.

        ``should_stop`` is polled before every chunk; returns False if it
        cut the scan short.
        """
        for rows in self.table.chunks(chunk_rows, stop):
            if should_stop is not None and should_stop():
                return False
            self.add(effective, rows)
        return True

    def value(self, cell: int) -> float:
        if self.function == "COUNT":
            return float(self.count[cell])
        if self.function == "SUM":
            return float(self.sum[cell])
        if self.function == "AVG":
            return float(self.sum[cell] / self.count[cell])
        if self.function == "MIN":
            return float(self.min[cell])
        return float(self.max[cell])

    def occupied(self) -> np.ndarray:
        return np.flatnonzero(self.count)

    def exact(self) -> ResultTable:
        """Group-by result over the rows seen; empty bins are absent."""
        bins = {self.grid.key(int(c)): BinValue(self.value(int(c))) for c in self.occupied()}
        return ResultTable(bins, progress=1.0)


def exact_result(
    table: ColumnarTable,
    viz: VizSpec,
    effective: FilterPredicate,
    chunk_rows: int = MAX_CHUNK_ROWS,
) -> ResultTable:
    """Complete group-by of ``viz`` over ``table``, with no deadline."""
    acc = BinAccumulator(viz, table)
    acc.consume(effective, chunk_rows)
    return acc.exact()
