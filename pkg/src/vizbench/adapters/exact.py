"""Blocking engine: full scans, exact results, nothing before completion."""

from __future__ import annotations

import logging

from vizbench.adapters.base import AdapterCapabilities, QueryRequest, SystemAdapter
from vizbench.adapters.columnar import BinAccumulator, ColumnarTable
from vizbench.config import MAX_CHUNK_ROWS
from vizbench.data.loader import DatasetSource
from vizbench.errors import AdapterError, QueryTimeoutError
from vizbench.model.results import ResultTable
from vizbench.model.schema import DatasetSchema

logger = logging.getLogger(__name__)


class ExactEngine(SystemAdapter):
    """Evaluates every query to completion over an in-memory column store.

    Star-schema inputs are joined back into one table during setup, so
    the join cost shows up as preparation time.
    """

    name = "exact"
    capabilities = AdapterCapabilities(supports_joins=True, supports_cancellation=True)

    def __init__(self, chunk_rows: int = MAX_CHUNK_ROWS):
        self.chunk_rows = min(chunk_rows, MAX_CHUNK_ROWS)
        self.table: ColumnarTable | None = None

    def _prepare(self, source: DatasetSource, schema: DatasetSchema) -> None:
        self.table = ColumnarTable.from_frame(source.load_frame(), schema)

    def execute(self, request: QueryRequest) -> ResultTable:
        """Exact group-by result.

        Raises
        ------
        QueryTimeoutError
            If the deadline passes before the scan completes; no partial
            result is returned.
        """
        if self.table is None:
            raise AdapterError(f"{self.name}: setup() has not been called")
        acc = BinAccumulator(request.viz, self.table)
        finished = acc.consume(request.effective, self.chunk_rows, should_stop=request.expired)
        if not finished or request.expired():
            logger.debug("Cancelled '%s' after %d rows", request.viz.name, acc.rows_seen)
            raise QueryTimeoutError(request.viz.name, request.time_requirement)
        return acc.exact()

    def process_request(self, request: QueryRequest) -> ResultTable:
        return self.execute(request)
