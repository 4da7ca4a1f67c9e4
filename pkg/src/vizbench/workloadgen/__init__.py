from vizbench.workloadgen.generator import (
    DEFAULT_INTERACTIONS,
    PATTERNS,
    GenerationConfig,
    column_stats,
    generate,
    generate_suite,
    minimum_length,
    quantile_range,
    sample_filter,
)
from vizbench.workloadgen.markov import DEFAULT_TABLES, KINDS, TransitionTable, sample_kinds
from vizbench.workloadgen.validate import Violation, validate

__all__ = [
    "DEFAULT_INTERACTIONS",
    "DEFAULT_TABLES",
    "KINDS",
    "PATTERNS",
    "GenerationConfig",
    "TransitionTable",
    "Violation",
    "column_stats",
    "generate",
    "generate_suite",
    "minimum_length",
    "quantile_range",
    "sample_filter",
    "sample_kinds",
    "validate",
]
