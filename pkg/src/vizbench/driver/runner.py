"""Replays workflows against a system adapter under a time requirement.

For every interaction the driver computes the vizs that must re-render,
issues their queries concurrently with one shared deadline, and collects
whatever is available when that deadline passes. Scoring against ground
truth happens after the workflow has finished, off the timed path.
"""

from __future__ import annotations

import concurrent.futures
import logging
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable

from vizbench.adapters.base import QueryRequest, SystemAdapter
from vizbench.config import RuntimeConfig
from vizbench.data.loader import DatasetSource
from vizbench.driver.oracle import GroundTruthOracle
from vizbench.driver.records import QueryRecord, workflow_label
from vizbench.driver.settings import BenchmarkSettings, size_label
from vizbench.errors import (
    AdapterFailure,
    QueryTimeoutError,
    SchemaError,
    VizbenchError,
    WorkflowAbortedError,
)
from vizbench.model.filters import FilterPredicate
from vizbench.model.results import ResultTable
from vizbench.model.schema import DatasetSchema, binning_type
from vizbench.model.viz import (
    CreateViz,
    Discard,
    Interaction,
    Link,
    Select,
    SetFilter,
    VizGraph,
    VizSpec,
    Workflow,
    dirty_set,
    effective_filter,
)
from vizbench.scoring.metrics import QueryScorer

logger = logging.getLogger(__name__)


@dataclass
class _Issued:
    interaction: int
    viz: VizSpec
    effective: FilterPredicate
    start: float
    future: Future
    end: float | None = None
    result: ResultTable | None = None
    violated: bool = False
    error: str | None = None


@dataclass
class SuiteResult:
    records: list[QueryRecord] = field(default_factory=list)
    prep_times: dict[str, dict[str, float]] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)


def _timed_call(adapter: SystemAdapter, request: QueryRequest):
    """Run one request; never raises, returns (result, error, end time)."""
    try:
        result = adapter.process_request(request)
        return result, None, time.time()
    except Exception as err:  # noqa: BLE001 - sorted out by the collector
        return None, err, time.time()


def max_fan_out(workflow: Workflow) -> int:
    """Largest number of queries a single interaction of ``workflow`` triggers.

    Raises
    ------
    SchemaError
        If the interactions do not replay cleanly.
    """
    graph = VizGraph()
    widest = 0
    for interaction in workflow.interactions:
        widest = max(widest, len(dirty_set(graph, interaction)))
        graph.apply(interaction)
    return widest


def _ms(seconds: float) -> int:
    return int(round(seconds * 1000))


def _until_deadline(batch: list[_Issued], settings: BenchmarkSettings) -> float:
    """Seconds left before the deadline of ``batch``; think time starts there."""
    if not batch:
        return 0.0
    return max(batch[0].start + settings.time_requirement - time.time(), 0.0)


class BenchmarkRunner:
    """Drive one adapter through workflows and record every query."""

    def __init__(
        self,
        adapter: SystemAdapter,
        oracle: GroundTruthOracle,
        table_name: str,
        config: RuntimeConfig | None = None,
        scorer: QueryScorer | None = None,
        select_rerenders_source: bool = True,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.adapter = adapter
        self.oracle = oracle
        self.table_name = table_name
        self.config = config or RuntimeConfig()
        self.scorer = scorer or QueryScorer()
        self.select_rerenders_source = select_rerenders_source
        self._sleep = sleep

    @property
    def schema(self) -> DatasetSchema:
        return self.oracle.schema

    # ------------------------------------------------------------------
    # One workflow
    # ------------------------------------------------------------------

    def run_workflow(self, workflow: Workflow, settings: BenchmarkSettings) -> list[QueryRecord]:
        """Replay ``workflow`` and return one scored record per issued query.

        Raises
        ------
        SchemaError
            If the workflow does not replay on an empty graph.
        WorkflowAbortedError
            If the adapter fails for good; carries the records of the
            interactions that completed.
        """
        for interaction in workflow.interactions:
            if isinstance(interaction, CreateViz):
                interaction.viz.validate(self.schema)
            elif isinstance(interaction, (SetFilter, Select)):
                interaction.predicate.validate(self.schema)
        workers = max(self.config.workers, max_fan_out(workflow), 1)
        logger.info(
            "Workflow '%s' (%d interactions) on %s, TR=%gs",
            workflow.name,
            len(workflow.interactions),
            self.adapter.name,
            settings.time_requirement,
        )
        graph = VizGraph()
        issued: list[_Issued] = []
        pool = ThreadPoolExecutor(max_workers=workers, thread_name_prefix="vizbench-query")
        try:
            self.adapter.workflow_start()
            last = len(workflow.interactions) - 1
            for index, interaction in enumerate(workflow.interactions):
                dirty = dirty_set(graph, interaction, self.select_rerenders_source)
                graph.apply(interaction)
                self._notify(interaction)
                batch = self._issue(pool, graph, dirty, index, settings)
                self._collect(batch, settings)
                issued.extend(batch)
                if index < last and settings.think_time > 0:
                    self._sleep(_until_deadline(batch, settings) + settings.think_time)
        except AdapterFailure as err:
            logger.error("Adapter failed during '%s': %s", workflow.name, err)
            raise WorkflowAbortedError(workflow.name, err, self._score(issued, workflow, settings)) from err
        finally:
            pool.shutdown(wait=False, cancel_futures=True)
            try:
                self.adapter.workflow_end()
            except AdapterFailure as err:
                logger.warning("workflow_end failed for '%s': %s", workflow.name, err)
        return self._score(issued, workflow, settings)

    def _notify(self, interaction: Interaction) -> None:
        if isinstance(interaction, Link):
            self.adapter.link_vizs(interaction.source, interaction.target)
        elif isinstance(interaction, Discard):
            self.adapter.delete_vizs([interaction.viz])

    def _issue(
        self,
        pool: ThreadPoolExecutor,
        graph: VizGraph,
        dirty: Iterable[str],
        index: int,
        settings: BenchmarkSettings,
    ) -> list[_Issued]:
        start = time.time()
        deadline = start + settings.time_requirement
        batch = []
        for name in sorted(dirty, key=graph.order):
            viz = graph.get(name)
            effective = effective_filter(graph, name)
            request = QueryRequest(
                viz=viz,
                effective=effective,
                table=self.table_name,
                schema=self.schema,
                deadline=deadline,
                confidence=settings.confidence_level,
                time_requirement=settings.time_requirement,
            )
            future = pool.submit(_timed_call, self.adapter, request)
            batch.append(_Issued(index, viz, effective, start, future))
        return batch

    def _collect(self, batch: list[_Issued], settings: BenchmarkSettings) -> None:
        """Wait for ``batch`` until its deadline plus the grace period.

        Results arriving after the deadline but within the grace period
        are kept and flagged as violations; anything later is abandoned.
        """
        if not batch:
            return
        tr = settings.time_requirement
        deadline = batch[0].start + tr
        futures = [item.future for item in batch]
        concurrent.futures.wait(futures, timeout=max(deadline - time.time(), 0.0))
        if not all(f.done() for f in futures):
            concurrent.futures.wait(futures, timeout=max(deadline + self.config.grace - time.time(), 0.0))

        failure: AdapterFailure | None = None
        for item in batch:
            if not item.future.done():
                item.future.cancel()
                item.end = min(time.time(), deadline + self.config.grace)
                item.violated = True
                logger.debug("Abandoned '%s' at the deadline", item.viz.name)
                continue
            result, error, end = item.future.result()
            item.end = end
            if error is None:
                item.result = result
                item.violated = end - item.start > tr
            elif isinstance(error, QueryTimeoutError):
                item.violated = True
            elif isinstance(error, AdapterFailure):
                item.violated = True
                item.error = str(error)
                failure = failure or error
            else:
                item.violated = True
                item.error = f"{type(error).__name__}: {error}"
                logger.warning("Query for '%s' failed: %s", item.viz.name, item.error)
        if failure is not None:
            raise failure

    # ------------------------------------------------------------------
    # Scoring
    # ------------------------------------------------------------------

    def _score(
        self, issued: list[_Issued], workflow: Workflow, settings: BenchmarkSettings
    ) -> list[QueryRecord]:
        data_size = settings.data_size or size_label(self.oracle.table.rows)
        records = []
        ordered = sorted(issued, key=lambda i: (i.interaction, i.viz.name))
        for record_id, item in enumerate(ordered):
            truth = self.oracle.truth(item.viz, item.effective)
            metrics = self.scorer.score_query(item.result, truth, item.violated)
            record = QueryRecord(
                id=record_id,
                interaction=item.interaction,
                viz_name=item.viz.name,
                driver=self.adapter.name,
                data_size=data_size,
                think_time=_ms(settings.think_time),
                time_req=_ms(settings.time_requirement),
                workflow=workflow_label(workflow.name, workflow.type),
                start_time=_ms(item.start),
                end_time=_ms(item.end if item.end is not None else item.start),
                tr_violated=item.violated,
                bin_dims=item.viz.dims,
                binning_type=binning_type(item.viz.binning, self.schema),
                agg_type=item.viz.aggregate.function.lower(),
                workflow_type=workflow.type,
                progress=item.result.progress if item.result is not None else None,
                error=item.error,
            )
            record.apply_metrics(metrics)
            records.append(record)
        violated = sum(r.tr_violated for r in records)
        logger.info("Workflow '%s': %d queries, %d over TR", workflow.name, len(records), violated)
        return records

    # ------------------------------------------------------------------
    # Suites
    # ------------------------------------------------------------------

    def run_suite(
        self,
        workflows: list[Workflow],
        grid: list[BenchmarkSettings],
        progress: Callable[[str], None] | None = None,
    ) -> SuiteResult:
        """Run every workflow under every setting; failures are logged and skipped."""
        out = SuiteResult()
        total = len(workflows) * len(grid)
        step = 0
        for settings in grid:
            for workflow in workflows:
                step += 1
                if progress is not None:
                    progress(f"[{step}/{total}] {workflow.name} TR={settings.time_requirement:g}s")
                try:
                    out.records.extend(self.run_workflow(workflow, settings))
                except WorkflowAbortedError as err:
                    out.records.extend(err.records)
                    out.failures.append(str(err))
                except VizbenchError as err:
                    logger.error("Skipping workflow '%s': %s", workflow.name, err)
                    out.failures.append(f"Workflow '{workflow.name}' skipped: {err}")
        return out


# ---------------------------------------------------------------------------
# Module-level entry points
# ---------------------------------------------------------------------------


def run_workflow(
    workflow: Workflow,
    adapter: SystemAdapter,
    settings: BenchmarkSettings,
    oracle: GroundTruthOracle,
    table_name: str = "dataset",
    config: RuntimeConfig | None = None,
) -> list[QueryRecord]:
    """Replay one workflow against an adapter that has already been set up."""
    return BenchmarkRunner(adapter, oracle, table_name, config).run_workflow(workflow, settings)


def run_suite(
    workflows: list[Workflow],
    adapter: SystemAdapter,
    source: DatasetSource,
    schema: DatasetSchema,
    grid: list[BenchmarkSettings],
    oracle: GroundTruthOracle | None = None,
    config: RuntimeConfig | None = None,
    progress: Callable[[str], None] | None = None,
) -> SuiteResult:
    """Set ``adapter`` up on ``source`` once, then run the whole settings grid.

    A ground-truth oracle is built from ``source`` unless one is passed.
    Preparation time is measured once per dataset and reported in
    ``SuiteResult.prep_times`` under the adapter name and size label.
    """
    config = config or RuntimeConfig()
    if any(s.use_joins for s in grid) and not source.is_star:
        raise SchemaError(f"Settings ask for joins but {source.path} is not a star schema")
    if oracle is None:
        oracle = GroundTruthOracle.from_source(source, schema, config.chunk_rows)
    label = size_label(oracle.table.rows)
    grid = [s if s.data_size else replace(s, data_size=label) for s in grid]

    prep = adapter.setup(source, schema)
    result = BenchmarkRunner(adapter, oracle, source.table, config).run_suite(workflows, grid, progress)
    result.prep_times = {adapter.name: {label: prep}}
    if result.failures:
        logger.warning("%d workflow run(s) failed", len(result.failures))
    return result
