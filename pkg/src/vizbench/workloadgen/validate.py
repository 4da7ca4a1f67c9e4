"""Replay checks for workflow files."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass

from vizbench.errors import SchemaError
from vizbench.model.schema import DatasetSchema
from vizbench.model.viz import CreateViz, Interaction, Select, SetFilter, VizGraph, Workflow


@dataclass(frozen=True)
class Violation:
    index: int
    message: str

    def __str__(self) -> str:
        return f"interaction {self.index}: {self.message}"


def _check_columns(interaction: Interaction, schema: DatasetSchema) -> None:
    if isinstance(interaction, CreateViz):
        interaction.viz.validate(schema)
    elif isinstance(interaction, (SetFilter, Select)):
        interaction.predicate.validate(schema)


def _topology_problem(workflow_type: str, graph: VizGraph) -> str | None:
    edges = graph.edges
    if not edges or workflow_type == "mixed":
        return None
    if workflow_type == "independent":
        return "independent workflows must not link visualizations"
    if workflow_type == "one-to-n":
        sources = sorted({s for s, _ in edges})
        if len(sources) > 1:
            return f"one-to-n links leave from several sources {sources}"
        return None
    if workflow_type == "n-to-one":
        targets = sorted({t for _, t in edges})
        if len(targets) > 1:
            return f"n-to-one links arrive at several targets {targets}"
        return None
    out_degree = Counter(s for s, _ in edges)
    in_degree = Counter(t for _, t in edges)
    starts = {s for s in out_degree if in_degree[s] == 0}
    if max(out_degree.values()) > 1 or max(in_degree.values()) > 1 or len(starts) != 1:
        return "sequential links do not form a single path"
    return None


def validate(workflow: Workflow, schema: DatasetSchema) -> list[Violation]:
    """Replay ``workflow`` and collect everything that does not apply cleanly.

    An interaction that fails a graph or column check is skipped, so later
    interactions are checked against the graph as it would stand.
    Topology problems are reported once, at the interaction that causes
    them.
    """
    violations: list[Violation] = []
    graph = VizGraph()
    last_problem: str | None = None
    for index, interaction in enumerate(workflow.interactions):
        try:
            graph.check(interaction)
            _check_columns(interaction, schema)
        except SchemaError as err:
            violations.append(Violation(index, str(err)))
            continue
        graph.apply(interaction)
        problem = _topology_problem(workflow.type, graph)
        if problem and problem != last_problem:
            violations.append(Violation(index, problem))
        last_problem = problem
    return violations
