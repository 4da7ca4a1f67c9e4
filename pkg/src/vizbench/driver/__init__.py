"""Benchmark driver: settings, replay, ground truth and records."""

from vizbench.driver.oracle import GroundTruthOracle, compute_ground_truth
from vizbench.driver.records import EXTRA_COLUMNS, TABLE_COLUMNS, QueryRecord, workflow_type_of
from vizbench.driver.runner import BenchmarkRunner, SuiteResult, max_fan_out, run_suite, run_workflow
from vizbench.driver.settings import (
    DEFAULT_TIME_REQUIREMENTS,
    STRESS_THINK_TIME,
    THINK_TIMES,
    BenchmarkSettings,
    parse_size,
    settings_grid,
    size_label,
)
