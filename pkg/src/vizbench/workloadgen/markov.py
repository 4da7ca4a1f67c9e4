"""Markov chains over interaction kinds.

The default tables below are this project's own calibration; they are
meant to be replaced through :class:`GenerationConfig` when a study has
measured interaction logs at hand.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from vizbench.errors import GenerationError

KINDS = ("create", "filter", "select", "link", "discard", "stop")
_STOP = KINDS.index("stop")


@dataclass(frozen=True, eq=False)
class TransitionTable:
    """Row-stochastic matrix over :data:`KINDS`; ``stop`` is absorbing."""

    matrix: np.ndarray
    initial: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        init = np.asarray(self.initial, dtype=float)
        n = len(KINDS)
        if m.shape != (n, n) or init.shape != (n,):
            raise GenerationError(f"Transition table must be {n}x{n} with an initial vector of {n}")
        if (m < 0).any() or (init < 0).any():
            raise GenerationError("Transition probabilities must be non-negative")
        bad = [KINDS[i] for i, s in enumerate(m.sum(axis=1)) if abs(s - 1.0) > 1e-9]
        if bad:
            raise GenerationError(f"Rows do not sum to 1: {bad}")
        if abs(init.sum() - 1.0) > 1e-9:
            raise GenerationError("Initial distribution does not sum to 1")
        if m[_STOP, _STOP] != 1.0:
            raise GenerationError("'stop' must be absorbing")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "initial", init)

    @classmethod
    def from_rows(
        cls, rows: Mapping[str, Mapping[str, float]], initial: Mapping[str, float]
    ) -> "TransitionTable":
        m = np.zeros((len(KINDS), len(KINDS)))
        for src, row in rows.items():
            for dst, p in row.items():
                m[KINDS.index(src), KINDS.index(dst)] = p
        m[_STOP] = 0.0
        m[_STOP, _STOP] = 1.0
        init = np.array([initial.get(k, 0.0) for k in KINDS])
        return cls(m, init)

    def to_dict(self) -> dict:
        rows = {
            src: {dst: float(self.matrix[i, j]) for j, dst in enumerate(KINDS) if self.matrix[i, j]}
            for i, src in enumerate(KINDS)
            if src != "stop"
        }
        initial = {k: float(p) for k, p in zip(KINDS, self.initial) if p}
        return {"rows": rows, "initial": initial}

    @classmethod
    def from_dict(cls, d: Mapping) -> "TransitionTable":
        return cls.from_rows(d["rows"], d["initial"])

    @classmethod
    def load(cls, path: Path | str) -> "TransitionTable":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def _row(self, probs: np.ndarray, allow_stop: bool) -> np.ndarray:
        if allow_stop:
            return probs
        probs = probs.copy()
        probs[_STOP] = 0.0
        total = probs.sum()
        if total == 0:
            raise GenerationError("Chain can only stop here")
        return probs / total

    def first_kind(self, rng: np.random.Generator) -> str:
        return KINDS[rng.choice(len(KINDS), p=self._row(self.initial, False))]

    def next_kind(self, current: str, rng: np.random.Generator, allow_stop: bool = True) -> str:
        row = self.matrix[KINDS.index(current)]
        return KINDS[rng.choice(len(KINDS), p=self._row(row, allow_stop))]

    def stationary(self) -> dict[str, float]:
        """Long-run kind frequencies of the chain conditioned on not stopping."""
        k = _STOP
        p = self.matrix[:k, :k].copy()
        sums = p.sum(axis=1, keepdims=True)
        p = np.divide(p, sums, out=np.zeros_like(p), where=sums > 0)
        a = np.vstack([p.T - np.eye(k), np.ones((1, k))])
        b = np.concatenate([np.zeros(k), [1.0]])
        pi, *_ = np.linalg.lstsq(a, b, rcond=None)
        pi = np.clip(pi, 0.0, None)
        pi /= pi.sum()
        return {kind: float(pi[i]) for i, kind in enumerate(KINDS[:k])}


def sample_kinds(table: TransitionTable, count: int, rng: np.random.Generator) -> list[str]:
    """Raw walk of ``count`` kinds, stop transitions renormalized away."""
    if count <= 0:
        return []
    kinds = [table.first_kind(rng)]
    while len(kinds) < count:
        kinds.append(table.next_kind(kinds[-1], rng, allow_stop=False))
    return kinds


_INDEPENDENT = TransitionTable.from_rows(
    {
        "create": {"create": 0.30, "filter": 0.40, "select": 0.15, "discard": 0.10, "stop": 0.05},
        "filter": {"create": 0.25, "filter": 0.40, "select": 0.15, "discard": 0.15, "stop": 0.05},
        "select": {"create": 0.25, "filter": 0.35, "select": 0.20, "discard": 0.15, "stop": 0.05},
        "link": {"create": 0.30, "filter": 0.40, "select": 0.15, "discard": 0.10, "stop": 0.05},
        "discard": {"create": 0.55, "filter": 0.25, "select": 0.10, "discard": 0.05, "stop": 0.05},
    },
    {"create": 1.0},
)

_SEQUENTIAL = TransitionTable.from_rows(
    {
        "create": {"create": 0.10, "filter": 0.10, "select": 0.10, "link": 0.60, "discard": 0.05, "stop": 0.05},
        "filter": {"create": 0.30, "filter": 0.25, "select": 0.25, "link": 0.10, "discard": 0.05, "stop": 0.05},
        "select": {"create": 0.30, "filter": 0.20, "select": 0.30, "link": 0.10, "discard": 0.05, "stop": 0.05},
        "link": {"create": 0.30, "filter": 0.25, "select": 0.30, "discard": 0.10, "stop": 0.05},
        "discard": {"create": 0.50, "filter": 0.20, "select": 0.15, "link": 0.10, "stop": 0.05},
    },
    {"create": 1.0},
)

_ONE_TO_N = TransitionTable.from_rows(
    {
        "create": {"create": 0.15, "filter": 0.05, "select": 0.10, "link": 0.60, "discard": 0.05, "stop": 0.05},
        "filter": {"create": 0.25, "filter": 0.20, "select": 0.35, "link": 0.10, "discard": 0.05, "stop": 0.05},
        "select": {"create": 0.25, "filter": 0.15, "select": 0.40, "link": 0.10, "discard": 0.05, "stop": 0.05},
        "link": {"create": 0.35, "filter": 0.15, "select": 0.35, "discard": 0.10, "stop": 0.05},
        "discard": {"create": 0.50, "filter": 0.15, "select": 0.20, "link": 0.10, "stop": 0.05},
    },
    {"create": 1.0},
)

_N_TO_ONE = TransitionTable.from_rows(
    {
        "create": {"create": 0.15, "filter": 0.10, "select": 0.05, "link": 0.60, "discard": 0.05, "stop": 0.05},
        "filter": {"create": 0.25, "filter": 0.35, "select": 0.20, "link": 0.10, "discard": 0.05, "stop": 0.05},
        "select": {"create": 0.25, "filter": 0.30, "select": 0.25, "link": 0.10, "discard": 0.05, "stop": 0.05},
        "link": {"create": 0.35, "filter": 0.30, "select": 0.20, "discard": 0.10, "stop": 0.05},
        "discard": {"create": 0.50, "filter": 0.20, "select": 0.15, "link": 0.10, "stop": 0.05},
    },
    {"create": 1.0},
)

DEFAULT_TABLES: dict[str, TransitionTable] = {
    "independent": _INDEPENDENT,
    "sequential": _SEQUENTIAL,
    "one-to-n": _ONE_TO_N,
    "n-to-one": _N_TO_ONE,
}
