"""The interface every system under test implements."""

from __future__ import annotations

import logging
import math
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Iterable

from vizbench.data.loader import DatasetSource
from vizbench.errors import SchemaError
from vizbench.model.filters import FilterPredicate
from vizbench.model.results import ResultTable
from vizbench.model.schema import DatasetSchema
from vizbench.model.viz import VizSpec

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class AdapterCapabilities:
    supports_progressive_poll: bool = False
    supports_margins: bool = False
    supports_joins: bool = False
    supports_cancellation: bool = False
    approximate: bool = False

    def __post_init__(self):
        if self.supports_margins and not (self.supports_progressive_poll or self.approximate):
            raise SchemaError("Margins require progressive or approximate execution")

    @classmethod
    def from_dict(cls, d: dict) -> "AdapterCapabilities":
        return cls(**{k: bool(v) for k, v in d.items() if k in cls.__dataclass_fields__})


@dataclass(frozen=True)
class QueryRequest:
    """One viz query as handed to an adapter.

    ``deadline`` is an absolute ``time.time()`` instant, ``None`` for no
    limit. ``time_requirement`` is the TR it was derived from (seconds).
    """

    viz: VizSpec
    effective: FilterPredicate
    table: str
    schema: DatasetSchema
    deadline: float | None = None
    confidence: float = 0.95
    time_requirement: float | None = None

    def __post_init__(self):
        if not 0.0 < self.confidence < 1.0:
            raise SchemaError(f"Confidence level must lie in (0, 1), got {self.confidence}")

    def remaining(self) -> float:
        if self.deadline is None:
            return math.inf
        return self.deadline - time.time()

    def expired(self) -> bool:
        return self.remaining() <= 0


class SystemAdapter(ABC):
    """Connects the driver to one data-processing system.

    Subclasses load data in :meth:`_prepare` and answer queries in
    :meth:`process_request`, which the driver calls concurrently from
    several threads. The remaining hooks are notifications and may be
    left as no-ops.
    """

    name: str = "adapter"
    capabilities: AdapterCapabilities = AdapterCapabilities()

    def setup(self, source: DatasetSource, schema: DatasetSchema) -> float:
        """Make the system ready for ``source``; return the preparation time in seconds."""
        start = time.perf_counter()
        self._prepare(source, schema)
        elapsed = time.perf_counter() - start
        logger.info("%s ready on %s in %.3fs", self.name, source.path, elapsed)
        return elapsed

    @abstractmethod
    def _prepare(self, source: DatasetSource, schema: DatasetSchema) -> None: ...

    @abstractmethod
    def process_request(self, request: QueryRequest) -> ResultTable:
        """Answer ``request``: the final result, or the latest one before its deadline."""

    def link_vizs(self, source: str, target: str) -> None:
        pass

    def delete_vizs(self, vizs: Iterable[str]) -> None:
        pass

    def workflow_start(self) -> None:
        pass

    def workflow_end(self) -> None:
        pass

    def close(self) -> None:
        pass
