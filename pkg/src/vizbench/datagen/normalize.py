"""Vertical partitioning of a de-normalized table into a star schema."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping

import pandas as pd

from vizbench.errors import SchemaError

SPEC_FILENAME = "star-spec.json"


@dataclass(frozen=True)
class DimensionSpec:
    name: str
    key: str
    attributes: tuple[str, ...]


@dataclass(frozen=True)
class StarSchemaSpec:
    """One fact table plus dimension tables keyed by dense surrogate keys.

    ``columns`` optionally records the de-normalized column order so a
    join-back can restore it.
    """

    fact: str
    dimensions: tuple[DimensionSpec, ...] = ()
    columns: tuple[str, ...] = ()

    @property
    def attribute_columns(self) -> set[str]:
        return {a for d in self.dimensions for a in d.attributes}

    def dimension_of(self, column: str) -> DimensionSpec | None:
        for dim in self.dimensions:
            if column in dim.attributes:
                return dim
        return None

    def validate(self, columns: Iterable[str]) -> None:
        available = set(columns)
        seen: set[str] = set()
        for dim in self.dimensions:
            if not dim.attributes:
                raise SchemaError(f"Dimension '{dim.name}' has no attributes")
            missing = [a for a in dim.attributes if a not in available]
            if missing:
                raise SchemaError(f"Dimension '{dim.name}' references unknown columns {missing}")
            overlap = seen & set(dim.attributes)
            if overlap:
                raise SchemaError(f"Attributes {sorted(overlap)} appear in more than one dimension")
            if dim.key in available:
                raise SchemaError(f"Key '{dim.key}' of '{dim.name}' clashes with a data column")
            seen |= set(dim.attributes)

    def to_dict(self) -> dict:
        d = {
            "fact": self.fact,
            "dimensions": [
                {"name": dim.name, "key": dim.key, "attributes": list(dim.attributes)}
                for dim in self.dimensions
            ],
        }
        if self.columns:
            d["columns"] = list(self.columns)
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "StarSchemaSpec":
        return cls(
            fact=d["fact"],
            dimensions=tuple(
                DimensionSpec(dim["name"], dim["key"], tuple(dim["attributes"]))
                for dim in d.get("dimensions", ())
            ),
            columns=tuple(d.get("columns", ())),
        )

    @classmethod
    def load(cls, path: Path | str) -> "StarSchemaSpec":
        file_path = Path(path)
        if not file_path.exists():
            raise FileNotFoundError(f"File not found: {file_path}")
        return cls.from_dict(json.loads(file_path.read_text(encoding="utf-8")))


def normalize(rows: pd.DataFrame, spec: StarSchemaSpec) -> dict[str, pd.DataFrame]:
    """Split ``rows`` into the fact table and one table per dimension.

    Dimension keys are assigned densely in order of first appearance.
    """
    spec.validate(rows.columns)
    fact = rows.copy()
    tables: dict[str, pd.DataFrame] = {}
    for dim in spec.dimensions:
        attrs = list(dim.attributes)
        keys = rows.groupby(attrs, sort=False, dropna=False).ngroup().to_numpy()
        table = rows[attrs].assign(**{dim.key: keys}).drop_duplicates(dim.key)
        tables[dim.name] = table.sort_values(dim.key)[[dim.key, *attrs]].reset_index(drop=True)
        fact = fact.drop(columns=attrs)
        fact[dim.key] = keys
    return {spec.fact: fact.reset_index(drop=True), **tables}


def denormalize(
    tables: Mapping[str, pd.DataFrame],
    spec: StarSchemaSpec,
    columns: Iterable[str] | None = None,
) -> pd.DataFrame:
    """Join dimensions back into the fact table (fact row order kept)."""
    if spec.fact not in tables:
        raise SchemaError(f"Missing fact table '{spec.fact}'")
    out = tables[spec.fact]
    for dim in spec.dimensions:
        if dim.name not in tables:
            raise SchemaError(f"Missing dimension table '{dim.name}'")
        out = out.merge(tables[dim.name], on=dim.key, how="left", sort=False)
        out = out.drop(columns=[dim.key])
    order = list(columns) if columns is not None else list(spec.columns)
    if order:
        out = out[order]
    return out.reset_index(drop=True)


def write_star(
    tables: Mapping[str, pd.DataFrame], spec: StarSchemaSpec, directory: Path | str
) -> Path:
    """Write every table as ``<name>.csv`` plus ``star-spec.json`` into ``directory``."""
    out_dir = Path(directory)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, table in tables.items():
        table.to_csv(out_dir / f"{name}.csv", index=False)
    (out_dir / SPEC_FILENAME).write_text(json.dumps(spec.to_dict(), indent=2), encoding="utf-8")
    return out_dir


def read_star(directory: Path | str) -> tuple[dict[str, pd.DataFrame], StarSchemaSpec]:
    in_dir = Path(directory)
    spec = StarSchemaSpec.load(in_dir / SPEC_FILENAME)
    tables = {}
    for name in [spec.fact, *(d.name for d in spec.dimensions)]:
        path = in_dir / f"{name}.csv"
        if not path.exists():
            raise FileNotFoundError(f"File not found: {path}")
        tables[name] = pd.read_csv(path, keep_default_na=False, na_values=[""])
    return tables, spec
