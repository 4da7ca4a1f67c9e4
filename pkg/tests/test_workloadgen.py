"""Tests for the Markov workload generator and workflow validation."""

import json

import numpy as np
import pytest

from vizbench.errors import GenerationError
from vizbench.model.filters import Atom, FilterPredicate
from vizbench.model.schema import NOMINAL, AggregateSpec, BinningSpec, ColumnStats, DatasetSchema
from vizbench.model.viz import (
    WORKFLOW_TYPES,
    CreateViz,
    Discard,
    Link,
    SetFilter,
    VizGraph,
    VizSpec,
    Workflow,
    dirty_set,
)
from vizbench.workloadgen import (
    DEFAULT_TABLES,
    KINDS,
    GenerationConfig,
    TransitionTable,
    generate,
    generate_suite,
    quantile_range,
    sample_filter,
    sample_kinds,
    validate,
)


def replay(workflow: Workflow) -> VizGraph:
    graph = VizGraph()
    for interaction in workflow.interactions:
        graph.apply(interaction)
    return graph


# ---------------------------------------------------------------------------
# Transition tables
# ---------------------------------------------------------------------------


class TestTransitionTable:
    def test_rows_must_sum_to_one(self):
        with pytest.raises(GenerationError):
            TransitionTable.from_rows({"create": {"filter": 0.5}}, {"create": 1.0})

    def test_round_trip(self, tmp_path):
        table = DEFAULT_TABLES["one-to-n"]
        path = tmp_path / "table.json"
        path.write_text(json.dumps(table.to_dict()))
        loaded = TransitionTable.load(path)
        assert np.allclose(loaded.matrix, table.matrix)
        assert np.allclose(loaded.initial, table.initial)

    def test_walk_matches_stationary_distribution(self):
        table = DEFAULT_TABLES["independent"]
        kinds = sample_kinds(table, 20_000, np.random.default_rng(4))
        assert "stop" not in kinds
        expected = table.stationary()
        observed = {k: kinds.count(k) / len(kinds) for k in expected}
        tv = 0.5 * sum(abs(observed[k] - expected[k]) for k in expected)
        assert tv <= 0.02

    def test_stationary_is_a_distribution(self):
        for table in DEFAULT_TABLES.values():
            pi = table.stationary()
            assert set(pi) == set(KINDS) - {"stop"}
            assert sum(pi.values()) == pytest.approx(1.0)


# ---------------------------------------------------------------------------
# Filter sampling
# ---------------------------------------------------------------------------


class TestSampleFilter:
    def setup_method(self):
        self.uniform = ColumnStats(
            "delay", "quantitative", quantiles=tuple(float(q) for q in np.linspace(0, 100, 101))
        )

    def test_quantile_interval_maps_to_values(self):
        a, b = quantile_range(self.uniform, 0.2, 0.1)
        assert a == pytest.approx(20.0)
        assert b == pytest.approx(30.0)

    def test_quantitative_range_width_within_bounds(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            (atom,) = sample_filter(self.uniform, rng).atoms
            lo, hi = atom.value
            assert atom.op == "range"
            assert 0 <= lo < hi <= 100
            assert 5.0 - 1e-9 <= hi - lo <= 50.0 + 1e-9

    def test_single_category(self):
        stats = ColumnStats("carrier", NOMINAL, frequencies=(("AA", 1.0),))
        pred = sample_filter(stats, np.random.default_rng(1))
        assert pred.atoms == (Atom("carrier", "=", "AA"),)

    def test_same_seed_same_predicate(self):
        one = sample_filter(self.uniform, np.random.default_rng(11))
        two = sample_filter(self.uniform, np.random.default_rng(11))
        assert one == two

    def test_collapsed_quantiles_fall_back_to_domain(self):
        stats = ColumnStats("flag", "quantitative", quantiles=(0.0,) * 100 + (10.0,))
        a, b = quantile_range(stats, 0.1, 0.2)
        assert (a, b) == pytest.approx((1.0, 3.0))


# ---------------------------------------------------------------------------
# Generation
# ---------------------------------------------------------------------------


class TestGenerate:
    def test_independent_has_no_links(self, schema):
        wf = generate(GenerationConfig("independent", schema, interaction_count=6, rng_seed=2))
        assert len(wf.interactions) == 6
        assert replay(wf).edges == set()

    @pytest.mark.parametrize("kind", ["independent", "sequential", "one-to-n", "n-to-one", "mixed"])
    def test_exact_interaction_count(self, schema, kind):
        wf = generate(GenerationConfig(kind, schema, rng_seed=5))
        assert len(wf.interactions) == 20
        assert wf.type == kind
        assert wf.name == f"{kind}_5"

    def test_one_to_n_fan_out(self, schema):
        for seed in range(5):
            wf = generate(GenerationConfig("one-to-n", schema, rng_seed=seed, fan_out=(3, 3)))
            edges = replay(wf).edges
            sources = {s for s, _ in edges}
            assert len(sources) == 1
            assert len(edges) == 3

    def test_one_to_n_has_an_interaction_fanning_out(self, schema):
        for seed in range(10):
            wf = generate(GenerationConfig("one-to-n", schema, rng_seed=seed, fan_out=(3, 3)))
            graph = VizGraph()
            widest = 0
            for interaction in wf.interactions:
                widest = max(widest, len(dirty_set(graph, interaction)))
                graph.apply(interaction)
            # the source plus its three targets re-render together
            assert widest >= 4, seed

    def test_n_to_one_fan_in(self, schema):
        wf = generate(GenerationConfig("n-to-one", schema, rng_seed=8, fan_out=(2, 2)))
        edges = replay(wf).edges
        assert len({t for _, t in edges}) == 1
        assert len(edges) == 2

    def test_sequential_is_a_path(self, schema):
        wf = generate(GenerationConfig("sequential", schema, rng_seed=3, fan_out=(3, 3)))
        edges = replay(wf).edges
        assert len(edges) == 3
        assert len({s for s, _ in edges}) == 3
        assert len({t for _, t in edges}) == 3

    def test_deterministic(self, schema):
        config = GenerationConfig("mixed", schema, rng_seed=21)
        assert generate(config) == generate(config)

    def test_stop_driven_length(self, schema):
        wf = generate(GenerationConfig("independent", schema, interaction_count=None, rng_seed=1))
        assert 1 <= len(wf.interactions) <= 200

    def test_custom_aggregates(self, schema):
        wf = generate(GenerationConfig("independent", schema, rng_seed=4, aggregates=("SUM",)))
        for interaction in wf.interactions:
            if isinstance(interaction, CreateViz):
                assert interaction.viz.aggregate.function in ("SUM", "COUNT")

    def test_generated_workflows_validate(self, schema):
        suite = generate_suite(schema, per_type=4, mixed=4, rng_seed=13)
        for wf in suite:
            assert validate(wf, schema) == [], wf.name

    def test_default_suite_size(self, schema):
        suite = generate_suite(schema, interaction_count=6, fan_out=(2, 2))
        assert len(suite) == 50
        assert sum(wf.type == "mixed" for wf in suite) == 10
        assert len({wf.name for wf in suite}) == 50


class TestGenerationErrors:
    def test_fan_out_below_two(self, schema):
        with pytest.raises(GenerationError):
            GenerationConfig("one-to-n", schema, fan_out=(1, 3))

    def test_unknown_type(self, schema):
        with pytest.raises(GenerationError):
            GenerationConfig("circular", schema)

    def test_budget_too_small_for_topology(self, schema):
        with pytest.raises(GenerationError):
            generate(GenerationConfig("one-to-n", schema, interaction_count=4))

    def test_not_enough_vizs(self, schema):
        with pytest.raises(GenerationError):
            generate(GenerationConfig("one-to-n", schema, fan_out=(3, 4), max_vizs=3))

    def test_single_column_schema(self, schema):
        narrow = DatasetSchema((schema.column("delay"),))
        with pytest.raises(GenerationError):
            generate(GenerationConfig("independent", narrow))


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


class TestValidate:
    def setup_method(self):
        self.a = VizSpec("a", (BinningSpec("carrier"),))
        self.b = VizSpec("b", (BinningSpec("delay", "fixed_count", k=10),), AggregateSpec("AVG", "distance"))

    def test_link_to_discarded_viz(self, schema):
        wf = Workflow(
            "sequential_0",
            "sequential",
            (CreateViz(self.a), CreateViz(self.b), Discard("b"), Link("a", "b")),
        )
        problems = validate(wf, schema)
        assert len(problems) == 1
        assert problems[0].index == 3
        assert "'b'" in problems[0].message

    def test_unknown_column(self, schema):
        bad = FilterPredicate.of(Atom("tail_number", "=", "N123"))
        wf = Workflow("independent_0", "independent", (CreateViz(self.a), SetFilter("a", bad)))
        problems = validate(wf, schema)
        assert len(problems) == 1
        assert "tail_number" in str(problems[0])

    def test_topology_reported_once(self, schema):
        c = VizSpec("c", (BinningSpec("state"),))
        wf = Workflow(
            "one-to-n_0",
            "one-to-n",
            (CreateViz(self.a), CreateViz(self.b), CreateViz(c), Link("a", "b"), Link("c", "b"),
             SetFilter("a", FilterPredicate())),
        )
        problems = validate(wf, schema)
        assert [p.index for p in problems] == [4]


# ---------------------------------------------------------------------------
# Fuzzing
# ---------------------------------------------------------------------------


class TestGeneratorFuzz:
    def test_thousand_random_configs_validate(self, schema):
        rng = np.random.default_rng(1000)
        for seed in range(1000):
            kind = WORKFLOW_TYPES[seed % len(WORKFLOW_TYPES)]
            lo = int(rng.integers(2, 4))
            config = GenerationConfig(
                kind,
                schema,
                interaction_count=int(rng.integers(12, 31)),
                rng_seed=seed,
                fan_out=(lo, lo + int(rng.integers(0, 3))),
                aggregates=("COUNT", "AVG", "SUM", "MIN", "MAX"),
            )
            wf = generate(config)
            assert len(wf.interactions) == config.interaction_count
            assert validate(wf, schema) == [], (seed, kind)

    def test_kinds_follow_the_stationary_distribution(self, schema):
        table = TransitionTable.from_rows(
            {
                "create": {"create": 0.2, "filter": 0.5, "select": 0.3},
                "filter": {"create": 0.3, "filter": 0.3, "select": 0.4},
                "select": {"create": 0.4, "filter": 0.4, "select": 0.2},
                "link": {"create": 1.0},
                "discard": {"create": 1.0},
            },
            {"create": 1.0},
        )
        observed = dict.fromkeys(("create", "filter", "select", "link", "discard"), 0)
        for seed in range(20):
            config = GenerationConfig(
                "independent", schema, interaction_count=500, rng_seed=seed, transitions=table, max_vizs=500
            )
            for interaction in generate(config).interactions:
                observed[interaction.kind] += 1
        total = sum(observed.values())
        assert total == 10_000
        expected = table.stationary()
        assert observed["link"] == observed["discard"] == 0
        tv = 0.5 * sum(abs(observed[k] / total - expected[k]) for k in expected)
        assert tv <= 0.02
