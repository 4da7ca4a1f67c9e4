"""Column metadata, binning and aggregate definitions.

Binning semantics live here so that every engine, the SQL renderer and
the workload generator agree on which bin a value falls into.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Mapping

import numpy as np
import pandas as pd

from vizbench.errors import SchemaError, UnknownCategoryError

NOMINAL = "nominal"
QUANTITATIVE = "quantitative"

FIXED_COUNT = "fixed_count"
FIXED_WIDTH = "fixed_width"
CATEGORY = "nominal"

AGGREGATES = ("COUNT", "SUM", "AVG", "MIN", "MAX")


# ---------------------------------------------------------------------------
# Columns
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ColumnSchema:
    """Name, kind and domain of one attribute."""

    name: str
    kind: str
    min: float | None = None
    max: float | None = None
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind == QUANTITATIVE:
            if self.min is None or self.max is None:
                raise SchemaError(f"Quantitative column '{self.name}' needs min and max")
            if self.min > self.max:
                raise SchemaError(
                    f"Column '{self.name}': min {self.min} is greater than max {self.max}"
                )
        elif self.kind == NOMINAL:
            if not self.categories:
                raise SchemaError(f"Nominal column '{self.name}' has no categories")
            if len(set(self.categories)) != len(self.categories):
                raise SchemaError(f"Nominal column '{self.name}' has duplicate categories")
        else:
            raise SchemaError(f"Column '{self.name}': unknown kind {self.kind!r}")

    @property
    def is_nominal(self) -> bool:
        return self.kind == NOMINAL

    @cached_property
    def _codes(self) -> dict[str, int]:
        return {c: i for i, c in enumerate(self.categories)}

    def code_of(self, category: object) -> int:
        """Position of ``category`` in the category list."""
        try:
            return self._codes[str(category)]
        except KeyError:
            raise UnknownCategoryError(self.name, category) from None

    def to_dict(self) -> dict:
        if self.is_nominal:
            return {"name": self.name, "kind": self.kind, "categories": list(self.categories)}
        return {"name": self.name, "kind": self.kind, "min": self.min, "max": self.max}

    @classmethod
    def from_dict(cls, d: Mapping) -> "ColumnSchema":
        if d["kind"] == NOMINAL:
            return cls(d["name"], NOMINAL, categories=tuple(str(c) for c in d["categories"]))
        return cls(d["name"], d["kind"], min=float(d["min"]), max=float(d["max"]))


@dataclass(frozen=True)
class ColumnStats:
    """Value statistics used to sample realistic filters.

    ``quantiles`` holds the 0%, 1%, ..., 100% quantiles of a quantitative
    column; ``frequencies`` holds (category, relative frequency) pairs of
    a nominal column.
    """

    name: str
    kind: str
    quantiles: tuple[float, ...] = ()
    frequencies: tuple[tuple[str, float], ...] = ()

    def to_dict(self) -> dict:
        if self.kind == NOMINAL:
            return {"frequencies": [[c, w] for c, w in self.frequencies]}
        return {"quantiles": list(self.quantiles)}

    @classmethod
    def from_dict(cls, name: str, kind: str, d: Mapping) -> "ColumnStats":
        return cls(
            name,
            kind,
            quantiles=tuple(float(q) for q in d.get("quantiles", ())),
            frequencies=tuple((str(c), float(w)) for c, w in d.get("frequencies", ())),
        )


def is_nominal_dtype(series: pd.Series) -> bool:
    return not pd.api.types.is_numeric_dtype(series) or pd.api.types.is_bool_dtype(series)


@dataclass(frozen=True)
class DatasetSchema:
    """Ordered column list of a (de-normalized) dataset."""

    columns: tuple[ColumnSchema, ...]
    stats: Mapping[str, ColumnStats] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise SchemaError("Duplicate column names in schema")

    @cached_property
    def _by_name(self) -> dict[str, ColumnSchema]:
        return {c.name: c for c in self.columns}

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    def column(self, name: str) -> ColumnSchema:
        try:
            return self._by_name[name]
        except KeyError:
            raise SchemaError(f"Unknown column '{name}'") from None

    @classmethod
    def from_frame(
        cls,
        df: pd.DataFrame,
        nominal: set[str] | None = None,
        with_stats: bool = True,
    ) -> "DatasetSchema":
        """Infer the schema (and optionally value statistics) of ``df``.

        Non-numeric columns are nominal; ``nominal`` forces additional
        columns to be treated as categories.
        """
        nominal = nominal or set()
        columns: list[ColumnSchema] = []
        stats: dict[str, ColumnStats] = {}
        for name in df.columns:
            series = df[name].dropna()
            if series.empty:
                raise SchemaError(f"Column '{name}' is entirely null")
            if name in nominal or is_nominal_dtype(series):
                values = series.astype(str)
                counts = values.value_counts()
                categories = tuple(sorted(counts.index))
                columns.append(ColumnSchema(name, NOMINAL, categories=categories))
                if with_stats:
                    total = float(counts.sum())
                    freqs = tuple((c, float(counts[c]) / total) for c in categories)
                    stats[name] = ColumnStats(name, NOMINAL, frequencies=freqs)
            else:
                values = series.astype(float).to_numpy()
                columns.append(
                    ColumnSchema(name, QUANTITATIVE, min=float(values.min()), max=float(values.max()))
                )
                if with_stats:
                    qs = np.quantile(values, np.linspace(0.0, 1.0, 101))
                    stats[name] = ColumnStats(name, QUANTITATIVE, quantiles=tuple(float(q) for q in qs))
        return cls(tuple(columns), stats)

    def to_dict(self) -> dict:
        out = []
        for col in self.columns:
            d = col.to_dict()
            if col.name in self.stats:
                d["stats"] = self.stats[col.name].to_dict()
            out.append(d)
        return {"columns": out}

    @classmethod
    def from_dict(cls, d: Mapping) -> "DatasetSchema":
        columns = []
        stats = {}
        for cd in d["columns"]:
            col = ColumnSchema.from_dict(cd)
            columns.append(col)
            if "stats" in cd:
                stats[col.name] = ColumnStats.from_dict(col.name, col.kind, cd["stats"])
        return cls(tuple(columns), stats)

    def save(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")

    @classmethod
    def load(cls, path: Path | str) -> "DatasetSchema":
        file_path = Path(path)
        if not file_path.exists():
            raise FileNotFoundError(f"File not found: {file_path}")
        return cls.from_dict(json.loads(file_path.read_text(encoding="utf-8")))


# ---------------------------------------------------------------------------
# Binning
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BinningSpec:
    """How one dimension of a viz groups its column.

    Nominal columns always bin by category, whatever ``method`` says.
    """

    column: str
    method: str = CATEGORY
    k: int | None = None
    width: float | None = None
    reference: float = 0.0

    def __post_init__(self):
        if self.method == FIXED_COUNT:
            if self.k is None or self.k < 1:
                raise SchemaError(f"Binning on '{self.column}': fixed_count needs k >= 1")
        elif self.method == FIXED_WIDTH:
            if self.width is None or not self.width > 0:
                raise SchemaError(f"Binning on '{self.column}': fixed_width needs w > 0")
        elif self.method != CATEGORY:
            raise SchemaError(f"Binning on '{self.column}': unknown method {self.method!r}")

    def validate(self, schema: DatasetSchema) -> None:
        col = schema.column(self.column)
        if not col.is_nominal and self.method == CATEGORY:
            raise SchemaError(
                f"Quantitative column '{self.column}' needs fixed_count or fixed_width binning"
            )

    def to_dict(self) -> dict:
        if self.method == FIXED_COUNT:
            return {"column": self.column, "method": FIXED_COUNT, "k": self.k}
        if self.method == FIXED_WIDTH:
            return {
                "column": self.column,
                "method": FIXED_WIDTH,
                "w": self.width,
                "reference": self.reference,
            }
        return {"column": self.column}

    @classmethod
    def from_dict(cls, d: Mapping) -> "BinningSpec":
        method = d.get("method", CATEGORY)
        if method == FIXED_COUNT:
            return cls(d["column"], FIXED_COUNT, k=int(d["k"]))
        if method == FIXED_WIDTH:
            return cls(
                d["column"], FIXED_WIDTH, width=float(d["w"]), reference=float(d.get("reference", 0.0))
            )
        return cls(d["column"], method)


def bin_of(value: object, spec: BinningSpec, column: ColumnSchema) -> str | int:
    """Bin key component of a single value.

    Fixed-count bins split [min, max] into k equal intervals with the last
    one closed on both ends; fixed-width bin i covers
    [reference + i*w, reference + (i+1)*w).
    """
    if column.is_nominal:
        return column.categories[column.code_of(value)]
    v = float(value)
    if spec.method == FIXED_COUNT:
        lo, hi = column.min, column.max
        if hi == lo:
            return 0
        index = math.floor(spec.k * (v - lo) / (hi - lo))
        return min(max(index, 0), spec.k - 1)
    if spec.method == FIXED_WIDTH:
        return math.floor((v - spec.reference) / spec.width)
    raise SchemaError(f"Quantitative column '{column.name}' cannot bin by category")


def bin_range(spec: BinningSpec, column: ColumnSchema) -> tuple[int, int]:
    """(first index, number of bins) a dimension can produce over the column domain."""
    if column.is_nominal:
        return 0, len(column.categories)
    if spec.method == FIXED_COUNT:
        return 0, spec.k
    first = math.floor((column.min - spec.reference) / spec.width)
    last = math.floor((column.max - spec.reference) / spec.width)
    return first, last - first + 1


def bin_bounds(spec: BinningSpec, column: ColumnSchema, index: int) -> tuple[float, float, bool]:
    """Value interval of quantitative bin ``index`` as (low, high, closed_right)."""
    if spec.method == FIXED_COUNT:
        step = (column.max - column.min) / spec.k
        lo = column.min + index * step
        if index >= spec.k - 1:
            return lo, column.max, True
        return lo, column.min + (index + 1) * step, False
    lo = spec.reference + index * spec.width
    return lo, lo + spec.width, False


def binning_type(binning: tuple[BinningSpec, ...], schema: DatasetSchema) -> str:
    return "_".join(schema.column(b.column).kind for b in binning)


# ---------------------------------------------------------------------------
# Aggregates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AggregateSpec:
    function: str = "COUNT"
    column: str | None = None

    def __post_init__(self):
        if self.function not in AGGREGATES:
            raise SchemaError(f"Unknown aggregate {self.function!r}")
        if self.function != "COUNT" and not self.column:
            raise SchemaError(f"{self.function} needs a target column")

    def validate(self, schema: DatasetSchema) -> None:
        if self.function == "COUNT":
            return
        if schema.column(self.column).is_nominal:
            raise SchemaError(f"{self.function} target '{self.column}' must be quantitative")

    @property
    def label(self) -> str:
        return self.function.lower()

    def to_dict(self) -> dict:
        d = {"fn": self.label}
        if self.function != "COUNT":
            d["column"] = self.column
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "AggregateSpec":
        fn = str(d["fn"]).upper()
        return cls(fn, None if fn == "COUNT" else d.get("column"))
