"""Online-aggregation engine over a fixed random row permutation.

After ``n`` of ``N`` permuted rows the engine reports, per bin:

* COUNT: ``c * N / n`` with margin ``z * N * sqrt(p (1 - p) / n)``,
  ``p = c / n`` (Bernoulli indicator per row);
* SUM: ``N * mean(y)`` over the per-row contributions ``y`` (value when
  the row is in the bin, else 0), margin ``z * N * std(y) / sqrt(n)``;
* AVG: the running mean, margin ``z * std(values) / sqrt(c)``;
* MIN/MAX: the running extreme, with an unbounded margin until the scan
  is complete.

Prefixes of a permutation are samples without replacement, so margins
carry the finite population correction ``sqrt((N - n) / (N - 1))`` and
vanish once every row has been read. Bins with fewer than two sampled
rows get an unbounded margin.
"""

from __future__ import annotations

import math
import time

import numpy as np
from scipy.stats import norm

from vizbench.adapters.base import AdapterCapabilities, QueryRequest, SystemAdapter
from vizbench.adapters.columnar import BinAccumulator, ColumnarTable
from vizbench.config import MAX_CHUNK_ROWS
from vizbench.data.loader import DatasetSource
from vizbench.errors import AdapterError
from vizbench.model.results import BinValue, ResultTable
from vizbench.model.schema import DatasetSchema

SAFETY_FRACTION = 0.05
SAFETY_MAX = 0.05


def z_value(confidence: float) -> float:
    """Two-sided normal quantile, e.g. 1.959964 for 0.95."""
    return float(norm.ppf(1.0 - (1.0 - confidence) / 2.0))


def estimate(acc: BinAccumulator, total_rows: int, confidence: float) -> ResultTable:
    """Scale the bins of ``acc`` (a prefix of ``total_rows`` rows) to population estimates."""
    n = acc.rows_seen
    if n == 0:
        return ResultTable({}, progress=0.0 if total_rows else 1.0)
    big_n = total_rows
    z = z_value(confidence)
    fpc = math.sqrt((big_n - n) / (big_n - 1)) if big_n > 1 else 0.0
    scale = big_n / n
    fn = acc.function

    bins = {}
    for cell in acc.occupied():
        cell = int(cell)
        c = int(acc.count[cell])
        if fn == "COUNT":
            p = c / n
            value = c * scale
            margin = z * big_n * math.sqrt(p * (1.0 - p) / n) * fpc
        elif fn == "SUM":
            s = float(acc.sum[cell])
            value = s * scale
            margin = z * big_n * _std(s, float(acc.sumsq[cell]), n) / math.sqrt(n) * fpc
        elif fn == "AVG":
            s = float(acc.sum[cell])
            value = s / c
            margin = z * _std(s, float(acc.sumsq[cell]), c) / math.sqrt(c) * fpc
        else:
            value = acc.value(cell)
            margin = 0.0 if n == big_n else math.inf
        if c < 2:
            margin = math.inf
        bins[acc.grid.key(cell)] = BinValue(value, margin)
    return ResultTable(bins, progress=n / big_n)


def _std(total: float, total_sq: float, n: int) -> float:
    """Sample standard deviation from a sum and a sum of squares."""
    if n < 2:
        return math.inf
    var = (total_sq - total * total / n) / (n - 1)
    return math.sqrt(max(var, 0.0))


class ProgressiveEngine(SystemAdapter):
    """Returns the best estimate available when the deadline arrives.

    The dataset is shuffled once during setup with ``seed``; every query
    then reads the shuffled rows in order and stops shortly before its
    deadline.
    """

    name = "progressive"
    capabilities = AdapterCapabilities(
        supports_progressive_poll=True,
        supports_margins=True,
        supports_joins=True,
        supports_cancellation=True,
    )

    def __init__(self, seed: int = 0, chunk_rows: int = MAX_CHUNK_ROWS):
        self.seed = seed
        self.chunk_rows = min(chunk_rows, MAX_CHUNK_ROWS)
        self.table: ColumnarTable | None = None

    def _prepare(self, source: DatasetSource, schema: DatasetSchema) -> None:
        table = ColumnarTable.from_frame(source.load_frame(), schema)
        order = np.random.default_rng(self.seed).permutation(table.rows)
        self.table = table.take(order)

    def _ready(self) -> ColumnarTable:
        if self.table is None:
            raise AdapterError(f"{self.name}: setup() has not been called")
        return self.table

    def snapshot(self, request: QueryRequest, rows_consumed: int) -> ResultTable:
        """Estimates after reading the first ``rows_consumed`` shuffled rows."""
        table = self._ready()
        acc = BinAccumulator(request.viz, table)
        acc.consume(request.effective, self.chunk_rows, stop=max(rows_consumed, 0))
        return estimate(acc, table.rows, request.confidence)

    def process_request(self, request: QueryRequest) -> ResultTable:
        table = self._ready()
        acc = BinAccumulator(request.viz, table)
        if request.deadline is None:
            acc.consume(request.effective, self.chunk_rows)
        else:
            tr = request.time_requirement or request.remaining()
            cutoff = request.deadline - min(SAFETY_FRACTION * tr, SAFETY_MAX)
            acc.consume(request.effective, self.chunk_rows, should_stop=lambda: time.time() >= cutoff)
        return estimate(acc, table.rows, request.confidence)