"""Tests for the NDJSON bridge to external systems (driven by mock_adapter.py)."""

import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import pytest

from vizbench.adapters import QueryRequest, SubprocessAdapter, get_adapter, parse_result
from vizbench.data.loader import DatasetSource
from vizbench.driver import BenchmarkSettings, run_suite
from vizbench.errors import AdapterError, AdapterFailure, AdapterProtocolError, QueryTimeoutError
from vizbench.model.filters import Atom, FilterPredicate
from vizbench.model.schema import FIXED_COUNT, BinningSpec
from vizbench.model.viz import CreateViz, SetFilter, VizSpec, Workflow

MOCK = Path(__file__).parent / "mock_adapter.py"
VIZ = VizSpec("v", (BinningSpec("carrier"), BinningSpec("hour", FIXED_COUNT, k=4)))


def mock(mode, log=None):
    command = [sys.executable, str(MOCK), mode]
    if log is not None:
        command.append(str(log))
    return SubprocessAdapter(command)


def request(schema, deadline=None, tr=None):
    return QueryRequest(VIZ, FilterPredicate(), "flights", schema, deadline=deadline, time_requirement=tr)


class TestParseResult:
    def test_decodes_keys_and_margins(self, schema):
        reply = {
            "bins": [
                {"key": ["AA", 2], "estimate": 3, "margin": 0.5},
                {"key": ["DL", 0.0], "estimate": 1.5, "margin": "inf"},
                {"key": ["UA", 1], "estimate": 2.0},
            ],
            "progress": 0.25,
        }
        result = parse_result(reply, VIZ, schema)
        assert result.progress == 0.25
        assert result[("AA", 2)].margin == 0.5
        assert result[("DL", 0)].unbounded
        assert result[("UA", 1)].margin is None

    @pytest.mark.parametrize(
        "reply",
        [
            {"progress": 1.0},
            {"bins": [{"key": ["AA"], "estimate": 1.0}]},
            {"bins": [{"key": ["AA", 1.5], "estimate": 1.0}]},
            {"bins": [{"key": ["AA", 1], "estimate": "many"}]},
            {"bins": [{"key": ["AA", 1], "estimate": 1.0, "margin": -1.0}]},
            {"bins": [], "progress": 2.0},
        ],
    )
    def test_malformed_replies(self, schema, reply):
        with pytest.raises(AdapterProtocolError):
            parse_result(reply, VIZ, schema)


class TestSubprocessAdapter:
    @pytest.fixture(autouse=True)
    def _source(self, dataset_csv, schema):
        self.source = DatasetSource.from_path(dataset_csv)
        self.schema = schema
        self.adapter = None
        yield
        if self.adapter is not None:
            self.adapter.close()

    def start(self, mode, log=None):
        self.adapter = mock(mode, log)
        self.adapter.setup(self.source, self.schema)
        return self.adapter

    def test_query_round_trip(self):
        adapter = self.start("ok")
        assert adapter.capabilities.supports_margins
        result = adapter.process_request(request(self.schema))
        assert result.estimates() == {("AA", 0): 42.0, ("DL", 1): 7.0}
        assert result[("DL", 1)].unbounded
        assert result.progress == 0.5

    def test_notifications_reach_the_process(self, tmp_path):
        log = tmp_path / "ops.log"
        adapter = self.start("ok", log)
        adapter.workflow_start()
        adapter.link_vizs("a", "b")
        adapter.delete_vizs(["a"])
        adapter.process_request(request(self.schema))
        adapter.workflow_end()
        adapter.close()
        self.adapter = None
        assert log.read_text().split() == ["setup", "start", "link", "delete", "query", "end"]

    def test_malformed_reply(self):
        adapter = self.start("garbage")
        with pytest.raises(AdapterProtocolError):
            adapter.process_request(request(self.schema))

    def test_garbage_fails_only_the_oldest_call(self):
        adapter = self.start("interleave")
        with ThreadPoolExecutor(max_workers=2) as pool:
            first = pool.submit(adapter.process_request, request(self.schema, deadline=time.time() + 5, tr=5))
            time.sleep(0.3)
            second = pool.submit(adapter.process_request, request(self.schema, deadline=time.time() + 5, tr=5))
            assert second.result().estimates() == {("AA", 0): 42.0, ("DL", 1): 7.0}
            with pytest.raises(AdapterProtocolError):
                first.result()

    def test_unhashable_id_does_not_stop_the_reader(self):
        adapter = self.start("badid")
        with pytest.raises(AdapterProtocolError):
            adapter.process_request(request(self.schema))
        result = adapter.process_request(request(self.schema, deadline=time.time() + 5, tr=5))
        assert result.estimates() == {("AA", 0): 42.0, ("DL", 1): 7.0}

    def test_error_reply(self):
        adapter = self.start("error")
        with pytest.raises(AdapterError, match="table is locked"):
            adapter.process_request(request(self.schema))

    def test_process_exit_is_a_failure(self):
        adapter = self.start("crash")
        with pytest.raises(AdapterFailure):
            adapter.process_request(request(self.schema))
        with pytest.raises(AdapterFailure):
            adapter.process_request(request(self.schema))

    def test_deadline_passes(self):
        adapter = self.start("slow")
        started = time.time()
        with pytest.raises(QueryTimeoutError):
            adapter.process_request(request(self.schema, deadline=started + 0.3, tr=0.3))
        assert time.time() - started < 1.5

    def test_query_before_setup(self):
        with pytest.raises(AdapterError):
            mock("ok").process_request(request(self.schema))

    def test_missing_executable(self):
        self.adapter = SubprocessAdapter(["/nonexistent/adapter-binary"])
        with pytest.raises(AdapterFailure):
            self.adapter.setup(self.source, self.schema)


def test_registry_builds_subprocess_adapter():
    adapter = get_adapter(f"subprocess:{sys.executable} {MOCK} ok")
    assert isinstance(adapter, SubprocessAdapter)
    assert adapter.command[-1] == "ok"
    assert adapter.command[0] == sys.executable


class TestWorkflowOverTheWire:
    WORKFLOW = Workflow(
        "independent_0",
        "independent",
        (
            CreateViz(VizSpec("a", (BinningSpec("carrier"),))),
            SetFilter("a", FilterPredicate.of(Atom("carrier", "!=", "NA"))),
            CreateViz(VizSpec("b", (BinningSpec("hour", FIXED_COUNT, k=4),))),
        ),
    )
    GRID = [BenchmarkSettings(time_requirement=5.0, think_time=0.0)]

    def replay(self, mode, dataset_csv, schema):
        adapter = mock(mode)
        try:
            return run_suite([self.WORKFLOW], adapter, DatasetSource.from_path(dataset_csv), schema, self.GRID)
        finally:
            adapter.close()

    def test_mock_completes_a_workflow(self, dataset_csv, schema):
        result = self.replay("ok", dataset_csv, schema)
        assert result.failures == []
        assert [r.viz_name for r in result.records] == ["a", "a", "b"]
        for r in result.records:
            assert r.driver == "subprocess"
            assert r.error is None
            assert not r.tr_violated
            assert r.bins_delivered == 2
            assert r.progress == 0.5
        assert set(result.prep_times) == {"subprocess"}

    def test_malformed_replies_become_recorded_errors(self, dataset_csv, schema):
        result = self.replay("garbage", dataset_csv, schema)
        assert result.failures == []
        assert len(result.records) == 3
        for r in result.records:
            assert r.error.startswith("AdapterProtocolError")
            assert r.tr_violated
            assert r.bins_delivered == 0
