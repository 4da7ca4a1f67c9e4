"""Command line: ``vizbench datagen | workloadgen | run | report``."""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import pandas as pd

from vizbench.adapters import get_adapter
from vizbench.config import RuntimeConfig, load_runtime_config
from vizbench.data.loader import DatasetSource, WorkflowLoader
from vizbench.datagen import fit, flights_star_spec, make_flights_seed, normalize, synthesize, write_star
from vizbench.datagen.normalize import StarSchemaSpec
from vizbench.driver import parse_size, run_suite, settings_grid
from vizbench.driver.settings import DEFAULT_TIME_REQUIREMENTS, STRESS_THINK_TIME
from vizbench.errors import VizbenchError
from vizbench.model.schema import DatasetSchema
from vizbench.model.viz import WORKFLOW_TYPES, Workflow
from vizbench.report import (
    PREP_TIMES_JSON,
    detailed_report,
    load_prep_times,
    read_detailed,
    save_prep_times,
    summary_report,
)
from vizbench.workloadgen import PATTERNS, TransitionTable, generate_suite, validate

logger = logging.getLogger(__name__)

SCHEMA_FILENAME = "schema.json"
BUILTIN_SEED = "flights"


def schema_path_for(dataset: Path) -> Path:
    """``schema.json`` inside a star directory, next to a CSV file otherwise."""
    return dataset / SCHEMA_FILENAME if dataset.is_dir() else dataset.parent / SCHEMA_FILENAME


def load_workflows(path: Path) -> list[Workflow]:
    if path.is_dir():
        return WorkflowLoader(path).load_all()
    loader = WorkflowLoader(path.parent)
    if path.suffix == ".jsonl":
        return loader.load_lines(path.name)
    return [loader.load_workflow(path.name)]


# ---------------------------------------------------------------------------
# Sub-commands
# ---------------------------------------------------------------------------


def cmd_datagen(args: argparse.Namespace, config: RuntimeConfig) -> int:
    if args.seed == BUILTIN_SEED:
        print(f"Building the built-in flights seed ({args.seed_rows} rows)...")
        seed = make_flights_seed(parse_size(args.seed_rows), rng_seed=args.rng)
        name = BUILTIN_SEED
    else:
        seed_path = Path(args.seed)
        if not seed_path.exists():
            raise FileNotFoundError(f"File not found: {seed_path}")
        seed = pd.read_csv(seed_path, keep_default_na=False, na_values=[""])
        name = seed_path.stem

    rows = parse_size(args.rows)
    print(f"Fitting copula on {len(seed)} seed rows...")
    model = fit(seed, sample_size=args.sample_size, rng_seed=args.rng)
    print(f"Synthesizing {rows} rows...")
    frame = synthesize(model, rows, rng_seed=args.rng, workers=config.workers)

    out = Path(args.out)
    if args.star:
        spec = flights_star_spec() if args.star == BUILTIN_SEED else StarSchemaSpec.load(args.star)
        if not spec.columns:
            spec = replace(spec, columns=tuple(frame.columns))
        target = out.with_suffix("") if out.suffix == ".csv" else out
        write_star(normalize(frame, spec), spec, target)
    else:
        target = out if out.suffix == ".csv" else out / f"{name}.csv"
        target.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(target, index=False)
    DatasetSchema.from_frame(frame).save(schema_path_for(target))
    print(f"Dataset written to {target}")
    return 0


def cmd_workloadgen(args: argparse.Namespace, config: RuntimeConfig) -> int:
    schema = DatasetSchema.load(args.schema)
    if args.type == "all":
        types, mixed = PATTERNS, args.workflows if args.mixed is None else args.mixed
    elif args.type == "mixed":
        types, mixed = (), args.workflows
    else:
        types, mixed = (args.type,), 0
    options = {"interaction_count": args.interactions or None}
    if args.transitions:
        options["transitions"] = TransitionTable.load(args.transitions)
    workflows = generate_suite(
        schema,
        per_type=args.workflows,
        mixed=mixed,
        rng_seed=args.rng,
        types=types,
        **options,
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for workflow in workflows:
        problems = validate(workflow, schema)
        if problems:
            logger.warning("%s: %s", workflow.name, "; ".join(map(str, problems)))
        workflow.save(out / f"{workflow.name}.json")
    print(f"Wrote {len(workflows)} workflows to {out}")
    return 0


def cmd_run(args: argparse.Namespace, config: RuntimeConfig) -> int:
    dataset = Path(args.dataset)
    source = DatasetSource.from_path(dataset)
    schema = DatasetSchema.load(args.schema or schema_path_for(dataset))
    workflows = load_workflows(Path(args.workflows))
    print(f"Loaded {len(workflows)} workflows.")

    grid = settings_grid(
        args.tr,
        args.think,
        stress=args.stress,
        confidence_level=args.confidence,
        use_joins=args.joins,
    )
    adapter = get_adapter(args.adapter, chunk_rows=config.chunk_rows, seed=args.rng)
    try:
        result = run_suite(workflows, adapter, source, schema, grid, config=config, progress=print)
    finally:
        adapter.close()

    csv_path = detailed_report(result.records, args.out)
    save_prep_times(result.prep_times, csv_path.parent / PREP_TIMES_JSON)
    for failure in result.failures:
        print(f"!! {failure}")
    print(f"{len(result.records)} query records written to {csv_path}")
    return 1 if result.failures else 0


def cmd_report(args: argparse.Namespace, config: RuntimeConfig) -> int:
    records = []
    for path in args.records:
        records.extend(read_detailed(path))
    prep_path = Path(args.prep_times) if args.prep_times else Path(args.records[0]).parent / PREP_TIMES_JSON
    prep_times = load_prep_times(prep_path)

    out = Path(args.out)
    detailed_report(records, out)
    cells = summary_report(records, prep_times, out)
    print(f"Summary of {len(cells)} groups written to {out}")
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vizbench",
        description="Benchmark interactive data exploration backends.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("datagen", help="Scale a seed dataset with a Gaussian copula")
    p.add_argument("--seed", default=BUILTIN_SEED, help="Seed CSV, or 'flights' for the built-in seed")
    p.add_argument("--seed-rows", default="50k", help="Rows of the built-in seed (default: 50k)")
    p.add_argument("--rows", required=True, help="Rows to generate, e.g. 100k, 5m, 1b")
    p.add_argument("--out", required=True, type=Path,
                   help="Output CSV, or a directory that receives <seed>.csv; star schemas write a directory")
    p.add_argument("--schema", "--star", dest="star",
                   help="Star-schema spec JSON, or 'flights' for the built-in one")
    p.add_argument("--rng", type=int, default=0, help="Random seed (default: 0)")
    p.add_argument("--sample-size", type=int, default=None, help="Seed rows used for fitting")
    p.set_defaults(handler=cmd_datagen)

    p = sub.add_parser("workloadgen", help="Generate workflows from a dataset schema")
    p.add_argument("--schema", required=True, type=Path)
    p.add_argument("--type", default="all", choices=("all", *WORKFLOW_TYPES))
    p.add_argument("--workflows", type=int, default=10, help="Workflows per type (default: 10)")
    p.add_argument("--mixed", type=int, default=None,
                   help="Mixed workflows with --type all (default: same as --workflows)")
    p.add_argument(
        "--count",
        "--interactions",
        dest="interactions",
        type=int,
        default=20,
        help="Interactions per workflow; 0 lets the stop state decide (default: 20)",
    )
    p.add_argument("--transitions", type=Path, help="Transition table JSON")
    p.add_argument("--rng", type=int, default=0)
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(handler=cmd_workloadgen)

    p = sub.add_parser("run", help="Run workflows against an adapter")
    p.add_argument("--adapter", default="exact", help="exact, progressive or subprocess:<command>")
    p.add_argument("--dataset", required=True, help="CSV file or star-schema directory")
    p.add_argument("--schema", type=Path, help="Dataset schema (default: schema.json next to the data)")
    p.add_argument("--workflows", required=True, help="Workflow directory, .json or .jsonl file")
    p.add_argument("--tr", type=float, nargs="+", default=list(DEFAULT_TIME_REQUIREMENTS),
                   help="Time requirements in seconds")
    p.add_argument("--think", type=float, nargs="+", default=[STRESS_THINK_TIME],
                   help="Think times in seconds")
    p.add_argument("--stress", action="store_true", help="Pin think time to 1 s")
    p.add_argument("--confidence", type=float, default=0.95)
    p.add_argument("--joins", action="store_true", help="Require a star-schema dataset")
    p.add_argument("--rng", type=int, default=0, help="Seed of the progressive engine's shuffle")
    p.add_argument("--out", required=True, type=Path,
                   help="Records CSV (prep_times.json lands next to it), or a directory")
    p.set_defaults(handler=cmd_run)

    p = sub.add_parser("report", help="Build the detailed and summary reports")
    p.add_argument("--records", required=True, nargs="+", help="detailed.csv or detailed.json files")
    p.add_argument("--prep-times", help=f"Prep-time ledger (default: {PREP_TIMES_JSON} next to the records)")
    p.add_argument("--out", required=True, type=Path)
    p.set_defaults(handler=cmd_report)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    config = load_runtime_config()
    logging.basicConfig(
        level=getattr(logging, config.log_level, logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.handler(args, config)
    except (VizbenchError, FileNotFoundError, ValueError) as err:
        print(f"!! {err}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
