"""Visualization specs, interactions, workflows and the link graph."""

from __future__ import annotations

import json
from collections import deque
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import ClassVar, Mapping, Union

from vizbench.errors import SchemaError
from vizbench.model.filters import FilterPredicate, conjoin
from vizbench.model.schema import AggregateSpec, BinningSpec, DatasetSchema

WORKFLOW_TYPES = ("independent", "sequential", "one-to-n", "n-to-one", "mixed")


@dataclass(frozen=True)
class VizSpec:
    """One visualization request: 1D or 2D binned aggregate."""

    name: str
    binning: tuple[BinningSpec, ...]
    aggregate: AggregateSpec = field(default_factory=AggregateSpec)
    own_filter: FilterPredicate = field(default_factory=FilterPredicate)
    selection: FilterPredicate = field(default_factory=FilterPredicate)

    def __post_init__(self):
        if not 1 <= len(self.binning) <= 2:
            raise SchemaError(f"Viz '{self.name}' needs 1 or 2 binning dimensions")

    @property
    def dims(self) -> int:
        return len(self.binning)

    def validate(self, schema: DatasetSchema) -> None:
        for b in self.binning:
            b.validate(schema)
        self.aggregate.validate(schema)
        self.own_filter.validate(schema)
        self.selection.validate(schema)

    def to_dict(self) -> dict:
        d = {
            "name": self.name,
            "binning": [b.to_dict() for b in self.binning],
            "agg": self.aggregate.to_dict(),
            "filter": self.own_filter.to_list(),
        }
        if self.selection:
            d["selection"] = self.selection.to_list()
        return d

    @classmethod
    def from_dict(cls, d: Mapping) -> "VizSpec":
        return cls(
            name=d["name"],
            binning=tuple(BinningSpec.from_dict(b) for b in d["binning"]),
            aggregate=AggregateSpec.from_dict(d.get("agg", {"fn": "count"})),
            own_filter=FilterPredicate.from_list(d.get("filter")),
            selection=FilterPredicate.from_list(d.get("selection")),
        )


# ---------------------------------------------------------------------------
# Interactions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CreateViz:
    viz: VizSpec
    kind: ClassVar[str] = "create"


@dataclass(frozen=True)
class SetFilter:
    viz: str
    predicate: FilterPredicate
    kind: ClassVar[str] = "filter"


@dataclass(frozen=True)
class Select:
    viz: str
    predicate: FilterPredicate
    kind: ClassVar[str] = "select"


@dataclass(frozen=True)
class Link:
    source: str
    target: str
    kind: ClassVar[str] = "link"


@dataclass(frozen=True)
class Discard:
    viz: str
    kind: ClassVar[str] = "discard"


Interaction = Union[CreateViz, SetFilter, Select, Link, Discard]


def interaction_to_dict(interaction: Interaction) -> dict:
    if isinstance(interaction, CreateViz):
        return {"kind": "create", "viz": interaction.viz.to_dict()}
    if isinstance(interaction, SetFilter):
        return {"kind": "filter", "viz": interaction.viz, "filter": interaction.predicate.to_list()}
    if isinstance(interaction, Select):
        return {
            "kind": "select",
            "viz": interaction.viz,
            "selection": interaction.predicate.to_list(),
        }
    if isinstance(interaction, Link):
        return {"kind": "link", "source": interaction.source, "target": interaction.target}
    return {"kind": "discard", "viz": interaction.viz}


def interaction_from_dict(d: Mapping) -> Interaction:
    kind = d.get("kind")
    if kind == "create":
        return CreateViz(VizSpec.from_dict(d["viz"]))
    if kind == "filter":
        return SetFilter(d["viz"], FilterPredicate.from_list(d.get("filter")))
    if kind == "select":
        return Select(d["viz"], FilterPredicate.from_list(d.get("selection")))
    if kind == "link":
        return Link(d["source"], d["target"])
    if kind == "discard":
        return Discard(d["viz"])
    raise SchemaError(f"Unknown interaction kind {kind!r}")


@dataclass(frozen=True)
class Workflow:
    name: str
    type: str
    interactions: tuple[Interaction, ...]

    def __post_init__(self):
        if self.type not in WORKFLOW_TYPES:
            raise SchemaError(f"Unknown workflow type {self.type!r}")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "type": self.type,
            "interactions": [interaction_to_dict(i) for i in self.interactions],
        }

    @classmethod
    def from_dict(cls, d: Mapping) -> "Workflow":
        return cls(
            d["name"],
            d["type"],
            tuple(interaction_from_dict(i) for i in d["interactions"]),
        )

    def save(self, path: Path | str) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2), encoding="utf-8")


# ---------------------------------------------------------------------------
# Link graph
# ---------------------------------------------------------------------------


class VizGraph:
    """Live visualizations and the directed links between them.

    Nodes keep their creation order; that order drives every deterministic
    traversal. Links are kept acyclic.
    """

    def __init__(self):
        self._nodes: dict[str, VizSpec] = {}
        self._order: dict[str, int] = {}
        self._edges: set[tuple[str, str]] = set()
        self._created = 0

    def __contains__(self, name: str) -> bool:
        return name in self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    @property
    def names(self) -> list[str]:
        return list(self._nodes)

    @property
    def edges(self) -> set[tuple[str, str]]:
        return set(self._edges)

    def get(self, name: str) -> VizSpec:
        try:
            return self._nodes[name]
        except KeyError:
            raise SchemaError(f"Unknown viz '{name}'") from None

    def order(self, name: str) -> int:
        return self._order[name]

    def copy(self) -> "VizGraph":
        other = VizGraph()
        other._nodes = dict(self._nodes)
        other._order = dict(self._order)
        other._edges = set(self._edges)
        other._created = self._created
        return other

    def parents(self, name: str) -> list[str]:
        return sorted((s for s, t in self._edges if t == name), key=self._order.__getitem__)

    def children(self, name: str) -> list[str]:
        return sorted((t for s, t in self._edges if s == name), key=self._order.__getitem__)

    def _walk(self, start: str, step) -> list[str]:
        seen: set[str] = set()
        queue = deque(step(start))
        while queue:
            node = queue.popleft()
            if node in seen:
                continue
            seen.add(node)
            queue.extend(step(node))
        return sorted(seen, key=self._order.__getitem__)

    def ancestors(self, name: str) -> list[str]:
        self.get(name)
        return self._walk(name, self.parents)

    def descendants(self, name: str) -> list[str]:
        self.get(name)
        return self._walk(name, self.children)

    def check(self, interaction: Interaction) -> None:
        """Raise :class:`SchemaError` if ``interaction`` does not apply here."""
        if isinstance(interaction, CreateViz):
            name = interaction.viz.name
            if name in self._order:
                raise SchemaError(f"Viz name '{name}' is already used in this workflow")
        elif isinstance(interaction, Link):
            self.get(interaction.source)
            self.get(interaction.target)
            if interaction.source == interaction.target:
                raise SchemaError(f"Cannot link '{interaction.source}' to itself")
            if (interaction.source, interaction.target) in self._edges:
                raise SchemaError(
                    f"'{interaction.source}' is already linked to '{interaction.target}'"
                )
            if interaction.source in self.descendants(interaction.target):
                raise SchemaError(
                    f"Linking '{interaction.source}' -> '{interaction.target}' creates a cycle"
                )
        else:
            self.get(interaction.viz)

    def apply(self, interaction: Interaction) -> None:
        self.check(interaction)
        if isinstance(interaction, CreateViz):
            name = interaction.viz.name
            self._nodes[name] = interaction.viz
            self._order[name] = self._created
            self._created += 1
        elif isinstance(interaction, SetFilter):
            spec = self._nodes[interaction.viz]
            self._nodes[interaction.viz] = replace(spec, own_filter=interaction.predicate)
        elif isinstance(interaction, Select):
            spec = self._nodes[interaction.viz]
            self._nodes[interaction.viz] = replace(spec, selection=interaction.predicate)
        elif isinstance(interaction, Link):
            self._edges.add((interaction.source, interaction.target))
        elif isinstance(interaction, Discard):
            del self._nodes[interaction.viz]
            self._edges = {(s, t) for s, t in self._edges if interaction.viz not in (s, t)}


def effective_filter(graph: VizGraph, viz: str) -> FilterPredicate:
    """Own filter of ``viz`` AND-ed with the filters and selections of all ancestors.

    Atoms are ordered by viz creation order, then column name.
    """
    graph.get(viz)
    parts: list[FilterPredicate] = []
    for name in sorted([viz, *graph.ancestors(viz)], key=graph.order):
        spec = graph.get(name)
        atoms = list(spec.own_filter.atoms)
        if name != viz:
            atoms += spec.selection.atoms
        atoms.sort(key=lambda a: a.column)
        parts.append(FilterPredicate(tuple(atoms)))
    return conjoin(parts)


def dirty_set(
    graph: VizGraph, interaction: Interaction, select_rerenders_source: bool = True
) -> frozenset[str]:
    """Vizs whose query changes when ``interaction`` is applied to ``graph``.

    ``graph`` is the state before the interaction. A selection re-renders
    its own viz (highlighting) unless ``select_rerenders_source`` is off.
    """
    graph.check(interaction)
    if isinstance(interaction, CreateViz):
        return frozenset({interaction.viz.name})
    if isinstance(interaction, SetFilter):
        return frozenset({interaction.viz, *graph.descendants(interaction.viz)})
    if isinstance(interaction, Select):
        dirty = set(graph.descendants(interaction.viz))
        if select_rerenders_source:
            dirty.add(interaction.viz)
        return frozenset(dirty)
    if isinstance(interaction, Link):
        return frozenset({interaction.target, *graph.descendants(interaction.target)})
    return frozenset()
