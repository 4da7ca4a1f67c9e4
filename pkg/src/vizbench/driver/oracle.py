"""Exact ground truth for every query the driver issues."""

from __future__ import annotations

import logging
import threading

from vizbench.adapters.columnar import ColumnarTable, exact_result
from vizbench.config import MAX_CHUNK_ROWS
from vizbench.data.loader import DatasetSource
from vizbench.model.filters import FilterPredicate
from vizbench.model.results import ResultTable
from vizbench.model.schema import DatasetSchema
from vizbench.model.viz import VizSpec

logger = logging.getLogger(__name__)


def compute_ground_truth(
    viz: VizSpec,
    effective: FilterPredicate,
    table: ColumnarTable,
    chunk_rows: int = MAX_CHUNK_ROWS,
) -> ResultTable:
    """Exact result of ``viz`` under ``effective`` over the whole dataset."""
    return exact_result(table, viz, effective, chunk_rows)


class GroundTruthOracle:
    """Caches ground truth per (binning, aggregate, effective filter).

    The viz name plays no part in the key: two vizs asking the same
    question share one result object.
    """

    def __init__(self, table: ColumnarTable, chunk_rows: int = MAX_CHUNK_ROWS):
        self.table = table
        self.chunk_rows = chunk_rows
        self._cache: dict[tuple, ResultTable] = {}
        self._lock = threading.Lock()

    @classmethod
    def from_source(
        cls, source: DatasetSource, schema: DatasetSchema, chunk_rows: int = MAX_CHUNK_ROWS
    ) -> "GroundTruthOracle":
        return cls(ColumnarTable.from_frame(source.load_frame(), schema), chunk_rows)

    @property
    def schema(self) -> DatasetSchema:
        return self.table.schema

    def __len__(self) -> int:
        return len(self._cache)

    def truth(self, viz: VizSpec, effective: FilterPredicate) -> ResultTable:
        key = (viz.binning, viz.aggregate, effective)
        with self._lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        result = compute_ground_truth(viz, effective, self.table, self.chunk_rows)
        with self._lock:
            return self._cache.setdefault(key, result)

    def clear(self) -> None:
        with self._lock:
            self._cache.clear()
