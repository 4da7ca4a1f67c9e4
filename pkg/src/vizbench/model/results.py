"""Per-bin query results."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterator, Mapping, Union

from vizbench.errors import SchemaError

# One component per binning dimension: a category label or an integer bin index.
BinKey = tuple[Union[str, int], ...]


@dataclass(frozen=True)
class BinValue:
    estimate: float
    margin: float | None = None

    def __post_init__(self):
        if self.margin is not None and self.margin < 0:
            raise SchemaError(f"Negative margin {self.margin}")

    @property
    def unbounded(self) -> bool:
        """Margin could not be estimated (too few samples in the bin)."""
        return self.margin is not None and math.isinf(self.margin)


@dataclass
class ResultTable:
    """Estimates per bin, with optional margins of error.

    ``progress`` is the fraction of the data an engine has consumed;
    exact engines always report 1.0.
    """

    bins: dict[BinKey, BinValue] = field(default_factory=dict)
    progress: float = 1.0
    produced_at: float = field(default_factory=time.time)

    def __post_init__(self):
        if not 0.0 <= self.progress <= 1.0:
            raise SchemaError(f"Progress {self.progress} outside [0, 1]")

    def __len__(self) -> int:
        return len(self.bins)

    def __iter__(self) -> Iterator[BinKey]:
        return iter(self.bins)

    def __contains__(self, key: BinKey) -> bool:
        return key in self.bins

    def __getitem__(self, key: BinKey) -> BinValue:
        return self.bins[key]

    def keys(self) -> set[BinKey]:
        return set(self.bins)

    @property
    def has_margins(self) -> bool:
        return any(v.margin is not None for v in self.bins.values())

    def estimates(self) -> dict[BinKey, float]:
        return {k: v.estimate for k, v in self.bins.items()}

    @classmethod
    def from_estimates(cls, values: Mapping[BinKey, float], progress: float = 1.0) -> "ResultTable":
        return cls({k: BinValue(float(v)) for k, v in values.items()}, progress=progress)
