"""Shared fixtures: a small deterministic dataset and a row-loop oracle."""

from __future__ import annotations

import math

import numpy as np
import pandas as pd
import pytest

from vizbench.adapters.columnar import ColumnarTable
from vizbench.model.filters import Atom, FilterPredicate
from vizbench.model.schema import DatasetSchema, bin_of
from vizbench.model.viz import VizSpec

CARRIERS = ["AA", "DL", "NA", "UA"]
STATES = ["CA", "NY", "TX"]


def make_frame(rows: int = 2000, seed: int = 7) -> pd.DataFrame:
    """Integer-valued measures so sums are exact in any order."""
    rng = np.random.default_rng(seed)
    carrier = rng.choice(CARRIERS, size=rows, p=[0.4, 0.3, 0.2, 0.1])
    state = rng.choice(STATES, size=rows)
    hour = rng.integers(0, 24, rows)
    delay = rng.integers(-20, 101, rows) + (carrier == "UA") * 15
    distance = rng.integers(100, 2001, rows)
    return pd.DataFrame(
        {
            "carrier": carrier,
            "state": state,
            "hour": hour.astype(np.int64),
            "delay": delay.astype(np.int64),
            "distance": distance.astype(np.int64),
        }
    )


def atom_matches(atom: Atom, value) -> bool:
    if atom.op == "=":
        return str(value) == atom.value
    if atom.op == "!=":
        return str(value) != atom.value
    v = float(value)
    if atom.op == "range":
        return atom.value[0] <= v < atom.value[1]
    return {
        "<": v < atom.value,
        "<=": v <= atom.value,
        ">": v > atom.value,
        ">=": v >= atom.value,
    }[atom.op]


def brute_force(frame: pd.DataFrame, schema: DatasetSchema, viz: VizSpec, effective: FilterPredicate) -> dict:
    """Row-by-row group-by: bin key -> aggregate value."""
    groups: dict[tuple, list[float]] = {}
    for row in frame.to_dict(orient="records"):
        if not all(atom_matches(a, row[a.column]) for a in effective.atoms):
            continue
        key = tuple(bin_of(row[b.column], b, schema.column(b.column)) for b in viz.binning)
        column = viz.aggregate.column
        groups.setdefault(key, []).append(float(row[column]) if column else 1.0)
    fn = viz.aggregate.function
    out = {}
    for key, values in groups.items():
        if fn == "COUNT":
            out[key] = float(len(values))
        elif fn == "SUM":
            out[key] = math.fsum(values)
        elif fn == "AVG":
            out[key] = math.fsum(values) / len(values)
        elif fn == "MIN":
            out[key] = min(values)
        else:
            out[key] = max(values)
    return out


@pytest.fixture
def frame() -> pd.DataFrame:
    return make_frame()


@pytest.fixture
def schema(frame) -> DatasetSchema:
    return DatasetSchema.from_frame(frame)


@pytest.fixture
def table(frame, schema) -> ColumnarTable:
    return ColumnarTable.from_frame(frame, schema)


@pytest.fixture
def dataset_csv(tmp_path, frame, schema):
    path = tmp_path / "flights.csv"
    frame.to_csv(path, index=False)
    schema.save(tmp_path / "schema.json")
    return path
