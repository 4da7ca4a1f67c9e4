"""Detailed and summary reports."""

from vizbench.report.detailed import DETAILED_CSV, DETAILED_JSON, detailed_frame, detailed_report, read_detailed
from vizbench.report.summary import (
    CDF_LEVELS,
    PREP_TIMES_JSON,
    SUMMARY_JSON,
    SUMMARY_SVG,
    SummaryCell,
    area_above_curve,
    load_prep_times,
    mre_cdf,
    plot_summary,
    save_prep_times,
    summarize,
    summary_report,
)
