"""Workflow generation.

A workflow is sampled one interaction kind at a time from the Markov
chain of its type. Each type has a topology to reach (no links, a
path, a fan-out or a fan-in over N links); the generator tracks the
steps still missing and forces them once the remaining budget is only
just large enough to hold them. Sampled kinds that cannot apply to the
current graph are substituted.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from vizbench.errors import GenerationError
from vizbench.model.filters import Atom, FilterPredicate, bin_range_predicate
from vizbench.model.schema import (
    AGGREGATES,
    FIXED_COUNT,
    FIXED_WIDTH,
    NOMINAL,
    AggregateSpec,
    BinningSpec,
    ColumnSchema,
    ColumnStats,
    DatasetSchema,
    bin_of,
    bin_range,
)
from vizbench.model.viz import (
    WORKFLOW_TYPES,
    CreateViz,
    Discard,
    Interaction,
    Link,
    Select,
    SetFilter,
    VizGraph,
    VizSpec,
    Workflow,
)
from vizbench.workloadgen.markov import DEFAULT_TABLES, TransitionTable

PATTERNS = ("independent", "sequential", "one-to-n", "n-to-one")
LINKING_TYPES = ("sequential", "one-to-n", "n-to-one")

DEFAULT_INTERACTIONS = 20
STOP_DRIVEN_CAP = 200
EPISODE_LENGTH = (4, 8)
TWO_D_SHARE = 0.3
K_CHOICES = (10, 20, 25, 50)
K_CHOICES_2D = (5, 10, 20)
MAX_SELECTED_BINS = 3


@dataclass(frozen=True)
class GenerationConfig:
    """Inputs of :func:`generate`.

    ``interaction_count=None`` lets the chain's stop state end the
    workflow (capped at ``max_interactions``). ``transitions`` is either
    one table for every pattern or a mapping from pattern name to table.
    """

    workflow_type: str
    schema: DatasetSchema
    interaction_count: int | None = DEFAULT_INTERACTIONS
    rng_seed: int = 0
    fan_out: tuple[int, int] = (2, 4)
    max_vizs: int = 10
    transitions: TransitionTable | Mapping[str, TransitionTable] | None = None
    aggregates: tuple[str, ...] = ("COUNT", "AVG")
    filter_width: tuple[float, float] = (0.05, 0.5)
    max_interactions: int = STOP_DRIVEN_CAP
    name: str | None = None

    def __post_init__(self):
        if self.workflow_type not in WORKFLOW_TYPES:
            raise GenerationError(f"Unknown workflow type {self.workflow_type!r}")
        if self.interaction_count is not None and self.interaction_count < 1:
            raise GenerationError(f"Interaction count must be >= 1, got {self.interaction_count}")
        lo, hi = self.fan_out
        if lo < 2 or hi < lo:
            raise GenerationError(f"Fan-out range must satisfy 2 <= low <= high, got {self.fan_out}")
        if self.max_vizs < 1:
            raise GenerationError("max_vizs must be >= 1")
        if self.max_interactions < 1:
            raise GenerationError("max_interactions must be >= 1")
        unknown = [fn for fn in self.aggregates if fn not in AGGREGATES]
        if unknown or not self.aggregates:
            raise GenerationError(f"Unknown aggregates {unknown}")
        w_lo, w_hi = self.filter_width
        if not 0 < w_lo <= w_hi <= 1:
            raise GenerationError(f"Filter width range must lie in (0, 1], got {self.filter_width}")

    def table_for(self, pattern: str) -> TransitionTable:
        if isinstance(self.transitions, TransitionTable):
            return self.transitions
        if self.transitions and pattern in self.transitions:
            return self.transitions[pattern]
        return DEFAULT_TABLES[pattern]


# ---------------------------------------------------------------------------
# Filter sampling
# ---------------------------------------------------------------------------


def column_stats(schema: DatasetSchema, name: str) -> ColumnStats:
    """Stored statistics of ``name``, or uniform ones derived from its domain."""
    if name in schema.stats:
        return schema.stats[name]
    col = schema.column(name)
    if col.is_nominal:
        share = 1.0 / len(col.categories)
        return ColumnStats(name, NOMINAL, frequencies=tuple((c, share) for c in col.categories))
    qs = np.linspace(col.min, col.max, 101)
    return ColumnStats(name, col.kind, quantiles=tuple(float(q) for q in qs))


def quantile_at(stats: ColumnStats, fraction: float) -> float:
    qs = np.asarray(stats.quantiles, dtype=float)
    return float(np.interp(fraction, np.linspace(0.0, 1.0, len(qs)), qs))


def quantile_range(stats: ColumnStats, start: float, width: float) -> tuple[float, float]:
    """Value interval between the ``start`` and ``start + width`` quantiles.

    Falls back to the same fractions of the value domain when the
    quantiles collapse (heavily repeated values).
    """
    qs = np.asarray(stats.quantiles, dtype=float)
    positions = np.linspace(0.0, 1.0, len(qs))
    a = float(np.interp(start, positions, qs))
    b = float(np.interp(start + width, positions, qs))
    if b <= a:
        lo, hi = float(qs[0]), float(qs[-1])
        a = lo + start * (hi - lo)
        b = a + width * (hi - lo)
    return a, b


def sample_category(stats: ColumnStats, rng: np.random.Generator) -> str:
    categories = [c for c, _ in stats.frequencies]
    weights = np.array([w for _, w in stats.frequencies], dtype=float)
    return str(categories[rng.choice(len(categories), p=weights / weights.sum())])


def sample_filter(
    stats: ColumnStats,
    rng: np.random.Generator,
    width: tuple[float, float] = (0.05, 0.5),
) -> FilterPredicate:
    """Random filter on one column.

    Nominal columns get an equality on a frequency-weighted category.
    Quantitative columns get a range spanning a quantile interval whose
    width is drawn uniformly from ``width``.
    """
    if stats.kind == NOMINAL:
        return FilterPredicate.of(Atom(stats.name, "=", sample_category(stats, rng)))
    w = rng.uniform(*width)
    start = rng.uniform(0.0, 1.0 - w)
    return FilterPredicate.of(Atom(stats.name, "range", quantile_range(stats, start, w)))


def nice_width(raw: float) -> float:
    """Round a bin width to 1, 2 or 5 times a power of ten."""
    exponent = math.floor(math.log10(raw))
    base = raw / 10**exponent
    step = 1 if base < 1.5 else 2 if base < 3.5 else 5 if base < 7.5 else 10
    return float(f"{step}e{exponent}")


# ---------------------------------------------------------------------------
# Viz and interaction sampling
# ---------------------------------------------------------------------------


class _Builder:
    """Workflow under construction: the replayed graph plus random draws."""

    def __init__(self, config: GenerationConfig, rng: np.random.Generator):
        self.config = config
        self.schema = config.schema
        self.rng = rng
        self.graph = VizGraph()
        self.interactions: list[Interaction] = []
        self._next_id = 0

    def emit(self, interaction: Interaction) -> None:
        self.graph.apply(interaction)
        self.interactions.append(interaction)

    def new_name(self) -> str:
        name = f"viz_{self._next_id}"
        self._next_id += 1
        return name

    def random_viz(self, name: str) -> VizSpec:
        columns = self.schema.columns
        dims = 2 if self.rng.random() < TWO_D_SHARE else 1
        picked = self.rng.choice(len(columns), size=dims, replace=False)
        binning = tuple(self._binning(columns[i], dims) for i in picked)
        return VizSpec(name, binning, self._aggregate())

    def _binning(self, col: ColumnSchema, dims: int) -> BinningSpec:
        if col.is_nominal:
            return BinningSpec(col.name)
        k = int(self.rng.choice(K_CHOICES if dims == 1 else K_CHOICES_2D))
        span = col.max - col.min
        if span == 0 or self.rng.random() < 0.5:
            return BinningSpec(col.name, FIXED_COUNT, k=k)
        return BinningSpec(col.name, FIXED_WIDTH, width=nice_width(span / k))

    def _aggregate(self) -> AggregateSpec:
        fn = str(self.rng.choice(self.config.aggregates))
        targets = [c.name for c in self.schema.columns if not c.is_nominal]
        if fn == "COUNT" or not targets:
            return AggregateSpec()
        return AggregateSpec(fn, str(self.rng.choice(targets)))

    def random_filter(self, viz: VizSpec) -> FilterPredicate:
        col = self.schema.columns[int(self.rng.integers(len(self.schema.columns)))]
        pred = sample_filter(column_stats(self.schema, col.name), self.rng, self.config.filter_width)
        if viz.own_filter and col.name not in viz.own_filter.columns and self.rng.random() < 0.5:
            return viz.own_filter.and_(pred)
        return pred

    def random_selection(self, viz: VizSpec) -> FilterPredicate:
        """Brush a run of up to three adjacent bins along one dimension."""
        spec = viz.binning[int(self.rng.integers(viz.dims))]
        col = self.schema.column(spec.column)
        stats = column_stats(self.schema, col.name)
        if col.is_nominal:
            return bin_range_predicate(spec, col, sample_category(stats, self.rng))
        value = quantile_at(stats, self.rng.random())
        first, count = bin_range(spec, col)
        index = bin_of(value, spec, col)
        run = int(self.rng.integers(1, MAX_SELECTED_BINS + 1))
        return bin_range_predicate(spec, col, index, min(index + run - 1, first + count - 1))


# ---------------------------------------------------------------------------
# Topology patterns
# ---------------------------------------------------------------------------


def minimum_length(pattern: str, n: int) -> int:
    """Fewest interactions that can complete ``pattern`` with ``n`` links."""
    if pattern == "independent":
        return 1
    # anchor, n x (create, link), closing selection
    return 2 * n + 2


class _Pattern:
    """One topology being built inside a workflow.

    For linking patterns the first viz created is the anchor: chain head,
    fan-out source or fan-in target. Vizs created afterwards wait in
    ``pending`` until linked. Only pending vizs are ever discarded, so the
    links made stay in place.
    """

    def __init__(self, kind: str, builder: _Builder, n: int = 0):
        self.kind = kind
        self.b = builder
        self.n = n if kind in LINKING_TYPES else 0
        self.members: list[str] = []
        self.linked: list[str] = []
        self.pending: list[str] = []
        self.links = 0
        self.fanned_out = kind not in LINKING_TYPES

    @property
    def linking(self) -> bool:
        return self.kind in LINKING_TYPES

    def fan_viz(self) -> str | None:
        """Viz whose selection exercises the completed topology."""
        if not self.linked:
            return None
        if self.kind == "n-to-one":
            return self.linked[1] if len(self.linked) > 1 else None
        return self.linked[0]

    def required(self) -> list[str]:
        if not self.linking:
            return [] if self.members else ["create"]
        steps = [] if self.linked else ["create"]
        need = self.n - self.links
        ready = min(len(self.pending), need)
        steps += ["link"] * ready + ["create", "link"] * (need - ready)
        if not self.fanned_out:
            steps.append("select")
        return steps

    def allows(self, kind: str, remaining: int, required: list[str]) -> bool:
        if kind == "create":
            return len(self.members) < self.b.config.max_vizs
        if kind in ("filter", "select"):
            return bool(self.members)
        if kind == "link":
            return self.linking and bool(self.linked and self.pending) and self.links < self.n
        if kind == "discard":
            if not self.linking:
                return len(self.members) >= 2
            growth = 1 if len(self.pending) <= self.n - self.links else 0
            return bool(self.pending) and remaining - 1 >= len(required) + growth
        return False

    def substitute(self, remaining: int, required: list[str]) -> str:
        for kind in [*required[:1], "create", "filter", "select"]:
            if self.allows(kind, remaining, required):
                return kind
        raise GenerationError(f"No applicable interaction in a {self.kind} pattern")

    def _target(self, forced: bool) -> str:
        fan = self.fan_viz()
        complete = self.linking and self.links >= self.n and fan is not None
        if complete and (forced or self.b.rng.random() < 0.5):
            return fan
        return self.members[int(self.b.rng.integers(len(self.members)))]

    def _touch(self, viz: str) -> None:
        if self.linking and self.links >= self.n and viz == self.fan_viz():
            self.fanned_out = True

    def realize(self, kind: str, forced: bool = False) -> None:
        b = self.b
        if kind == "create":
            name = b.new_name()
            b.emit(CreateViz(b.random_viz(name)))
            self.members.append(name)
            if self.linking and not self.linked:
                self.linked.append(name)
            elif self.linking:
                self.pending.append(name)
        elif kind == "link":
            fresh = self.pending.pop(0)
            if self.kind == "sequential":
                b.emit(Link(self.linked[-1], fresh))
            elif self.kind == "one-to-n":
                b.emit(Link(self.linked[0], fresh))
            else:
                b.emit(Link(fresh, self.linked[0]))
            self.linked.append(fresh)
            self.links += 1
        elif kind == "filter":
            viz = self._target(forced)
            b.emit(SetFilter(viz, b.random_filter(b.graph.get(viz))))
            self._touch(viz)
        elif kind == "select":
            viz = self._target(forced)
            b.emit(Select(viz, b.random_selection(b.graph.get(viz))))
            self._touch(viz)
        elif kind == "discard":
            pool = self.pending if self.linking else self.members
            viz = pool[int(b.rng.integers(len(pool)))]
            b.emit(Discard(viz))
            self.members.remove(viz)
            if viz in self.pending:
                self.pending.remove(viz)
        else:
            raise GenerationError(f"Cannot realize interaction kind {kind!r}")

    def run(self, budget: int, table: TransitionTable, stop_driven: bool) -> tuple[bool, int]:
        """Emit up to ``budget`` interactions; return (stopped, emitted).

        With a fixed budget exactly ``budget`` interactions are emitted.
        When stop-driven, a sampled stop ends the pattern as soon as its
        topology is complete.
        """
        rng = self.b.rng
        state: str | None = None
        stopping = False
        emitted = 0
        while emitted < budget:
            remaining = budget - emitted
            required = self.required()
            if stopping and not required:
                break
            forced = stopping or remaining <= len(required)
            if forced:
                kind = required[0]
            else:
                if state is None:
                    kind = table.first_kind(rng)
                else:
                    kind = table.next_kind(state, rng, allow_stop=stop_driven)
                if kind == "stop":
                    stopping = True
                    if not required:
                        break
                    kind, forced = required[0], True
                elif not self.allows(kind, remaining, required):
                    kind = self.substitute(remaining, required)
            self.realize(kind, forced)
            state = kind
            emitted += 1
        return stopping, emitted


# ---------------------------------------------------------------------------
# Entry points
# ---------------------------------------------------------------------------


def _fan_out(config: GenerationConfig, rng: np.random.Generator) -> int:
    lo, hi = config.fan_out
    if lo + 1 > config.max_vizs:
        raise GenerationError(
            f"Fan-out {lo} needs {lo + 1} visualizations but max_vizs is {config.max_vizs}"
        )
    hi = min(hi, config.max_vizs - 1)
    budget = config.interaction_count or config.max_interactions
    hi = min(hi, (budget - 2) // 2)
    if hi < lo:
        raise GenerationError(
            f"{budget} interactions cannot hold a {config.workflow_type} workflow "
            f"with fan-out {lo} (needs {minimum_length(config.workflow_type, lo)})"
        )
    return int(rng.integers(lo, hi + 1))


def _generate_mixed(builder: _Builder) -> None:
    config, rng = builder.config, builder.rng
    n = config.fan_out[0]
    patterns = [p for p in PATTERNS if p == "independent" or n + 1 <= config.max_vizs]
    stop_driven = config.interaction_count is None
    total = config.interaction_count or config.max_interactions
    emitted = 0
    while emitted < total:
        remaining = total - emitted
        kind = str(rng.choice(patterns))
        length = max(int(rng.integers(EPISODE_LENGTH[0], EPISODE_LENGTH[1] + 1)), minimum_length(kind, n))
        if length > remaining:
            length = remaining
            if length < minimum_length(kind, n):
                kind = "independent"
        stopped, used = _Pattern(kind, builder, n).run(length, config.table_for(kind), stop_driven)
        emitted += used
        if stopped:
            break


def generate(config: GenerationConfig) -> Workflow:
    """Sample one workflow of ``config.workflow_type``.

    Raises
    ------
    GenerationError
        If the schema has fewer than two columns or the interaction and
        viz budgets cannot hold the requested topology.
    """
    if len(config.schema.columns) < 2:
        raise GenerationError("Workload generation needs a schema with at least 2 columns")
    rng = np.random.default_rng(config.rng_seed)
    builder = _Builder(config, rng)
    kind = config.workflow_type
    if kind == "mixed":
        _generate_mixed(builder)
    else:
        n = _fan_out(config, rng) if kind in LINKING_TYPES else 0
        budget = config.interaction_count or config.max_interactions
        _Pattern(kind, builder, n).run(budget, config.table_for(kind), config.interaction_count is None)
    name = config.name or f"{kind}_{config.rng_seed}"
    return Workflow(name, kind, tuple(builder.interactions))


def generate_suite(
    schema: DatasetSchema,
    per_type: int = 10,
    mixed: int = 10,
    rng_seed: int = 0,
    types: tuple[str, ...] = PATTERNS,
    **options,
) -> list[Workflow]:
    """``per_type`` workflows of every pattern plus ``mixed`` mixed ones.

    Workflows are named ``<type>_<i>``; each gets its own seed spawned
    from ``rng_seed``.
    """
    plan = [(t, per_type) for t in types] + [("mixed", mixed)]
    seeds = iter(np.random.SeedSequence(rng_seed).spawn(sum(count for _, count in plan)))
    suite = []
    for kind, count in plan:
        for i in range(count):
            seed = int(next(seeds).generate_state(1, dtype=np.uint64)[0])
            config = GenerationConfig(kind, schema, rng_seed=seed, name=f"{kind}_{i}", **options)
            suite.append(generate(config))
    return suite
