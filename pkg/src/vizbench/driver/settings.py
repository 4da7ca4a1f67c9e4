"""Benchmark settings and the settings grid."""

from __future__ import annotations

import re
from dataclasses import dataclass

DEFAULT_TIME_REQUIREMENTS = (0.5, 1.0, 3.0, 5.0, 10.0)
THINK_TIMES = tuple(float(s) for s in range(1, 11))
STRESS_THINK_TIME = 1.0
DEFAULT_CONFIDENCE = 0.95

_SIZE_RE = re.compile(r"^\s*(\d+(?:\.\d+)?)\s*([kmb]?)\s*$", re.IGNORECASE)
_FACTORS = {"": 1, "k": 10**3, "m": 10**6, "b": 10**9}


def size_label(rows: int) -> str:
    """Short row-count label, e.g. 500_000_000 -> ``500m``."""
    for suffix in ("b", "m", "k"):
        factor = _FACTORS[suffix]
        if rows >= factor:
            return f"{rows / factor:g}{suffix}"
    return str(rows)


def parse_size(text: str) -> int:
    """Inverse of :func:`size_label`: ``1.5k`` -> 1500."""
    match = _SIZE_RE.match(str(text))
    if not match:
        raise ValueError(f"Cannot parse row count {text!r}; use e.g. 1000, 10k, 1m or 1b")
    return int(round(float(match.group(1)) * _FACTORS[match.group(2).lower()]))


@dataclass(frozen=True)
class BenchmarkSettings:
    """One point of the settings grid. Durations are in seconds."""

    time_requirement: float
    think_time: float = STRESS_THINK_TIME
    confidence_level: float = DEFAULT_CONFIDENCE
    use_joins: bool = False
    data_size: str = ""

    def __post_init__(self):
        if not self.time_requirement > 0:
            raise ValueError(f"Time requirement must be > 0, got {self.time_requirement}")
        if self.think_time < 0:
            raise ValueError(f"Think time must be >= 0, got {self.think_time}")
        if not 0.0 < self.confidence_level < 1.0:
            raise ValueError(f"Confidence level must lie in (0, 1), got {self.confidence_level}")


def settings_grid(
    time_requirements=DEFAULT_TIME_REQUIREMENTS,
    think_times=THINK_TIMES,
    stress: bool = True,
    confidence_level: float = DEFAULT_CONFIDENCE,
    use_joins: bool = False,
    data_size: str = "",
) -> list[BenchmarkSettings]:
    """Every (TR, think time) combination; stress mode pins think time to 1 s."""
    thinks = (STRESS_THINK_TIME,) if stress else tuple(think_times)
    return [
        BenchmarkSettings(float(tr), float(think), confidence_level, use_joins, data_size)
        for tr in time_requirements
        for think in thinks
    ]
