#!/usr/bin/env python3
"""Run the interactive data exploration benchmark end to end.

Builds a dataset from the built-in flights seed (or a seed CSV), generates
workflows, replays them against one or more adapters, writes the
detailed and summary reports and prints a summary table.

Usage:
    python run_benchmark.py                          # 100k rows, exact + progressive
    python run_benchmark.py --rows 5m --tr 0.5 1 3   # bigger data, fewer TRs
    python run_benchmark.py --adapter "subprocess:python my_adapter.py"
"""

from __future__ import annotations

import argparse
import logging
from pathlib import Path

import pandas as pd

from vizbench.adapters import get_adapter
from vizbench.config import load_runtime_config
from vizbench.data.loader import DatasetSource
from vizbench.datagen import fit, make_flights_seed, synthesize
from vizbench.driver import GroundTruthOracle, parse_size, run_suite, settings_grid
from vizbench.driver.settings import DEFAULT_TIME_REQUIREMENTS
from vizbench.model.schema import DatasetSchema
from vizbench.report import PREP_TIMES_JSON, detailed_report, read_detailed, save_prep_times, summary_report
from vizbench.workloadgen import generate_suite


def print_results(cells: list, prep_times: dict) -> None:
    """Pretty-print one line per (adapter, TR, workflow type)."""
    print("\n" + "=" * 78)
    print("BENCHMARK RESULTS")
    print("=" * 78)

    header = f"{'Adapter':<14} {'Size':>6} {'TR(s)':>6} {'Workflow':<12} {'Queries':>7} {'Viol':>6} {'Miss':>6} {'Area':>6}"
    print(header)
    print("-" * 78)

    for cell in cells:
        missing = "" if cell.mean_missing_bins is None else f"{cell.mean_missing_bins:.2f}"
        area = "" if cell.area_above_curve is None else f"{cell.area_above_curve:.0%}"
        print(
            f"{cell.adapter:<14} "
            f"{cell.data_size:>6} "
            f"{cell.time_req / 1000:>6g} "
            f"{cell.workflow_type:<12} "
            f"{cell.queries:>7} "
            f"{cell.tr_violation_rate:>6.0%} "
            f"{missing:>6} "
            f"{area:>6}"
        )

    if prep_times:
        print("-" * 78)
        print("  Data preparation:")
        for adapter, sizes in prep_times.items():
            for size, seconds in sizes.items():
                print(f"    {adapter:<22} {size:>6} {seconds:8.2f}s")

    print("=" * 78)


def main():
    parser = argparse.ArgumentParser(
        description="Run the interactive data exploration benchmark."
    )
    parser.add_argument(
        "--seed",
        type=Path,
        default=None,
        help="Seed CSV (default: built-in flights seed)",
    )
    parser.add_argument(
        "--rows",
        type=str,
        default="100k",
        help="Rows to generate (default: 100k)",
    )
    parser.add_argument(
        "--adapter",
        action="append",
        default=None,
        help="Adapter to benchmark; repeatable (default: exact and progressive)",
    )
    parser.add_argument(
        "--tr",
        type=float,
        nargs="+",
        default=list(DEFAULT_TIME_REQUIREMENTS),
        help="Time requirements in seconds (default: 0.5 1 3 5 10)",
    )
    parser.add_argument(
        "--workflows",
        type=int,
        default=3,
        help="Workflows per type (default: 3)",
    )
    parser.add_argument(
        "--rng",
        type=int,
        default=0,
        help="Random seed for data, workflows and shuffles (default: 0)",
    )
    parser.add_argument(
        "--output",
        type=Path,
        default=Path("results"),
        help="Output directory (default: results/)",
    )

    args = parser.parse_args()
    config = load_runtime_config()
    logging.basicConfig(level=getattr(logging, config.log_level, logging.INFO))

    # 1. Seed and synthetic dataset
    if args.seed:
        print(f"Loading seed from {args.seed}...")
        seed = pd.read_csv(args.seed, keep_default_na=False, na_values=[""])
    else:
        print("Building built-in flights seed...")
        seed = make_flights_seed(rng_seed=args.rng)
    rows = parse_size(args.rows)
    print(f"Scaling {len(seed)} seed rows to {rows}...")
    frame = synthesize(fit(seed, rng_seed=args.rng), rows, rng_seed=args.rng, workers=config.workers)

    data_dir = args.output / "data"
    data_dir.mkdir(parents=True, exist_ok=True)
    dataset = data_dir / "dataset.csv"
    frame.to_csv(dataset, index=False)
    schema = DatasetSchema.from_frame(frame)
    schema.save(data_dir / "schema.json")

    # 2. Workflows
    workflows = generate_suite(schema, per_type=args.workflows, mixed=args.workflows, rng_seed=args.rng)
    print(f"Generated {len(workflows)} workflows.")

    # 3. Run every adapter over the settings grid
    source = DatasetSource.from_path(dataset)
    oracle = GroundTruthOracle.from_source(source, schema, config.chunk_rows)
    grid = settings_grid(args.tr, stress=True)
    records, prep_times = [], {}
    for name in args.adapter or ["exact", "progressive"]:
        print(f"\nRunning {len(workflows)} workflows x {len(grid)} settings on {name}...")
        adapter = get_adapter(name, chunk_rows=config.chunk_rows, seed=args.rng)
        try:
            result = run_suite(workflows, adapter, source, schema, grid, oracle=oracle, config=config, progress=print)
        finally:
            adapter.close()
        records.extend(result.records)
        prep_times.update(result.prep_times)
        for failure in result.failures:
            print(f"!! {failure}")

    # 4. Reports
    csv_path = detailed_report(records, args.output)
    save_prep_times(prep_times, args.output / PREP_TIMES_JSON)
    # summarize what the CSV holds so the summary can be rebuilt from it
    cells = summary_report(read_detailed(csv_path), prep_times, args.output)

    # 5. Print results
    print_results(cells, prep_times)
    print(f"\nResults saved to {args.output}")


if __name__ == "__main__":
    main()
