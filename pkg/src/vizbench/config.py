"""Runtime configuration read from the environment (and ``.env``)."""

from __future__ import annotations

import os
from dataclasses import dataclass

from dotenv import load_dotenv

# Built-in engines never process more rows than this between deadline checks.
MAX_CHUNK_ROWS = 10_000


@dataclass(frozen=True)
class RuntimeConfig:
    workers: int = 8
    grace_ms: int = 100
    chunk_rows: int = MAX_CHUNK_ROWS
    log_level: str = "INFO"

    @property
    def grace(self) -> float:
        return self.grace_ms / 1000.0


def _int_env(name: str, default: int, minimum: int) -> int:
    raw = os.getenv(name)
    if raw is None or raw.strip() == "":
        return default
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{name} must be an integer, got {raw!r}") from None
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}, got {value}")
    return value


def load_runtime_config() -> RuntimeConfig:
    """Build a :class:`RuntimeConfig` from ``VIZBENCH_*`` variables."""
    load_dotenv()
    chunk_rows = min(_int_env("VIZBENCH_CHUNK_ROWS", MAX_CHUNK_ROWS, 1), MAX_CHUNK_ROWS)
    return RuntimeConfig(
        workers=_int_env("VIZBENCH_WORKERS", 8, 1),
        grace_ms=_int_env("VIZBENCH_GRACE_MS", 100, 0),
        chunk_rows=chunk_rows,
        log_level=os.getenv("VIZBENCH_LOG_LEVEL", "INFO").upper(),
    )
