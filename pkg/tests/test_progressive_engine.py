"""Tests for the online-aggregation engine."""

import math
import time

import numpy as np
import pandas as pd
import pytest

from vizbench.adapters import (
    BinAccumulator,
    ColumnarTable,
    ProgressiveEngine,
    QueryRequest,
    exact_result,
    z_value,
)
from vizbench.adapters.progressive import estimate
from vizbench.data.loader import DatasetSource
from vizbench.model.filters import Atom, FilterPredicate
from vizbench.model.schema import FIXED_COUNT, AggregateSpec, BinningSpec, DatasetSchema
from vizbench.model.viz import VizSpec
from vizbench.scoring import mean_relative_error


def request(viz, schema, effective=FilterPredicate(), deadline=None, tr=None):
    return QueryRequest(viz, effective, "flights", schema, deadline=deadline, time_requirement=tr)


def test_z_value():
    assert z_value(0.95) == pytest.approx(1.959964, abs=1e-6)
    assert z_value(0.99) == pytest.approx(2.575829, abs=1e-6)


class TestSnapshot:
    @pytest.fixture(autouse=True)
    def _ready(self, dataset_csv, schema, table):
        self.engine = ProgressiveEngine(seed=1, chunk_rows=128)
        self.schema = schema
        self.table = table
        self.engine.setup(DatasetSource.from_path(dataset_csv), schema)

    @pytest.mark.parametrize("fn", ["COUNT", "SUM", "AVG", "MIN", "MAX"])
    def test_full_consumption_is_exact(self, fn):
        aggregate = AggregateSpec(fn, None if fn == "COUNT" else "delay")
        viz = VizSpec("v", (BinningSpec("carrier"), BinningSpec("hour", FIXED_COUNT, k=4)), aggregate)
        snap = self.engine.snapshot(request(viz, self.schema), self.table.rows)
        truth = exact_result(self.table, viz, FilterPredicate())
        assert snap.progress == 1.0
        assert snap.estimates() == pytest.approx(truth.estimates())
        for key in snap:
            assert snap[key].margin == 0.0 or snap[key].unbounded

    def test_partial_snapshot(self):
        viz = VizSpec("v", (BinningSpec("carrier"),))
        snap = self.engine.snapshot(request(viz, self.schema), 200)
        assert snap.progress == pytest.approx(0.1)
        assert snap.has_margins
        total = sum(snap.estimates().values())
        assert total == pytest.approx(self.table.rows)

    def test_empty_filter_match(self):
        viz = VizSpec("v", (BinningSpec("carrier"),))
        none = FilterPredicate.of(Atom("distance", "<", 0.0))
        snap = self.engine.snapshot(request(viz, self.schema, none), 500)
        assert len(snap) == 0
        assert not snap.has_margins

    def test_minimum_is_unbounded_until_complete(self):
        viz = VizSpec("v", (BinningSpec("state"),), AggregateSpec("MIN", "delay"))
        snap = self.engine.snapshot(request(viz, self.schema), 300)
        assert all(snap[key].unbounded for key in snap)

    def test_no_deadline_reads_everything(self):
        viz = VizSpec("v", (BinningSpec("state"),), AggregateSpec("AVG", "distance"))
        result = self.engine.process_request(request(viz, self.schema))
        truth = exact_result(self.table, viz, FilterPredicate())
        assert result.progress == 1.0
        assert result.estimates() == pytest.approx(truth.estimates())

    def test_expired_deadline_returns_what_it_has(self):
        viz = VizSpec("v", (BinningSpec("state"),))
        result = self.engine.process_request(request(viz, self.schema, deadline=time.time() - 1, tr=1.0))
        assert result.progress == 0.0
        assert len(result) == 0

    def test_same_seed_same_shuffle(self, dataset_csv):
        other = ProgressiveEngine(seed=1, chunk_rows=128)
        other.setup(DatasetSource.from_path(dataset_csv), self.schema)
        viz = VizSpec("v", (BinningSpec("carrier"),))
        one = self.engine.snapshot(request(viz, self.schema), 150)
        two = other.snapshot(request(viz, self.schema), 150)
        assert one.bins == two.bins
        assert one.progress == two.progress


def _two_category_table(rows=10_000):
    frame = pd.DataFrame({"side": np.where(np.arange(rows) % 2 == 0, "a", "b"), "x": np.arange(rows) % 97})
    schema = DatasetSchema.from_frame(frame, with_stats=False)
    return ColumnarTable.from_frame(frame, schema)


def test_count_margin_coverage():
    table = _two_category_table()
    viz = VizSpec("v", (BinningSpec("side"),))
    truth = exact_result(table, viz, FilterPredicate())[("a",)].estimate
    rng = np.random.default_rng(2024)
    covered = 0
    trials = 1000
    for _ in range(trials):
        shuffled = table.take(rng.permutation(table.rows))
        acc = BinAccumulator(viz, shuffled)
        acc.consume(FilterPredicate(), stop=table.rows // 10)
        est = estimate(acc, table.rows, 0.95)[("a",)]
        covered += abs(est.estimate - truth) <= est.margin
    assert covered / trials >= 0.93


@pytest.mark.slow
def test_avg_margin_coverage():
    table = _two_category_table()
    viz = VizSpec("v", (BinningSpec("side"),), AggregateSpec("AVG", "x"))
    truth = exact_result(table, viz, FilterPredicate())[("b",)].estimate
    rng = np.random.default_rng(7)
    covered = 0
    trials = 1000
    for _ in range(trials):
        acc = BinAccumulator(viz, table.take(rng.permutation(table.rows)))
        acc.consume(FilterPredicate(), stop=table.rows // 20)
        est = estimate(acc, table.rows, 0.95)[("b",)]
        assert not math.isinf(est.margin)
        covered += abs(est.estimate - truth) <= est.margin
    assert covered / trials >= 0.93


def _million_rows():
    rng = np.random.default_rng(11)
    rows = 1_000_000
    frame = pd.DataFrame(
        {
            "segment": rng.choice(list("abcdefghij"), size=rows, p=np.linspace(1, 2, 10) / 15),
            "x": rng.normal(50.0, 15.0, rows),
        }
    )
    schema = DatasetSchema.from_frame(frame, with_stats=False)
    return ColumnarTable.from_frame(frame, schema)


@pytest.mark.slow
def test_margins_calibrated_on_a_million_rows():
    table = _million_rows()
    viz = VizSpec("v", (BinningSpec("segment"),))
    truth = exact_result(table, viz, FilterPredicate())
    rng = np.random.default_rng(3)
    outside = trials = 0
    for _ in range(100):
        acc = BinAccumulator(viz, table.take(rng.permutation(table.rows)))
        acc.consume(FilterPredicate(), stop=table.rows // 20)
        for key, value in estimate(acc, table.rows, 0.95).bins.items():
            trials += 1
            outside += abs(value.estimate - truth[key].estimate) > value.margin
    assert trials >= 1000
    assert 0.02 <= outside / trials <= 0.08


@pytest.mark.slow
def test_error_shrinks_as_more_rows_are_read():
    table = _million_rows()
    viz = VizSpec("v", (BinningSpec("segment"),), AggregateSpec("AVG", "x"))
    truth = exact_result(table, viz, FilterPredicate())
    rng = np.random.default_rng(4)
    early, late = [], []
    for _ in range(20):
        shuffled = table.take(rng.permutation(table.rows))
        for fraction, errors in ((0.05, early), (0.5, late)):
            acc = BinAccumulator(viz, shuffled)
            acc.consume(FilterPredicate(), stop=int(table.rows * fraction))
            errors.append(mean_relative_error(estimate(acc, table.rows, 0.95), truth)[0])
    assert np.median(late) < np.median(early)
