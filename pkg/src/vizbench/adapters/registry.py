"""Adapter lookup by command-line name."""

from __future__ import annotations

from vizbench.adapters.base import SystemAdapter
from vizbench.adapters.exact import ExactEngine
from vizbench.adapters.progressive import ProgressiveEngine
from vizbench.adapters.subprocess_bridge import SubprocessAdapter
from vizbench.config import MAX_CHUNK_ROWS

SUBPROCESS_PREFIX = "subprocess:"


def get_adapter(name: str, chunk_rows: int = MAX_CHUNK_ROWS, seed: int = 0) -> SystemAdapter:
    """``exact``, ``progressive`` or ``subprocess:<command line>``."""
    if name.startswith(SUBPROCESS_PREFIX):
        command = name[len(SUBPROCESS_PREFIX) :].strip()
        if not command:
            raise ValueError("subprocess adapter needs a command, e.g. 'subprocess:python my_adapter.py'")
        return SubprocessAdapter(command)
    if name == "exact":
        return ExactEngine(chunk_rows=chunk_rows)
    if name == "progressive":
        return ProgressiveEngine(seed=seed, chunk_rows=chunk_rows)
    raise ValueError(f"Unknown adapter {name!r}; expected exact, progressive or subprocess:<cmd>")
