"""Aggregated summary: TR violations, missing bins and the MRE distribution.

Queries are grouped by driver, data size, time requirement and workflow
type. The MRE distribution only looks at queries that met their time
requirement; the violation rate and missing-bin mean look at all of them.
"""

from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from pathlib import Path
from statistics import fmean
from typing import Iterable, Mapping

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from scipy.integrate import trapezoid  # noqa: E402

from vizbench.driver.records import QueryRecord, workflow_type_of  # noqa: E402

logger = logging.getLogger(__name__)

SUMMARY_JSON = "summary.json"
SUMMARY_SVG = "summary.svg"
PREP_TIMES_JSON = "prep_times.json"

CDF_POINTS = 200
CDF_LEVELS = np.linspace(0.0, 1.0, CDF_POINTS)


@dataclass(frozen=True)
class SummaryCell:
    adapter: str
    data_size: str
    time_req: int
    workflow_type: str
    queries: int
    tr_violation_rate: float
    mean_missing_bins: float | None
    mre_count: int
    mre_cdf: list[tuple[float, float]] = field(default_factory=list)
    area_above_curve: float | None = None
    prep_time: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        d["mre_cdf"] = [list(p) for p in self.mre_cdf]
        return d


def mre_cdf(errors: Iterable[float]) -> list[tuple[float, float]]:
    """Empirical CDF of ``errors`` at :data:`CDF_LEVELS`, truncated at 1.0.

    Errors above 1.0 stay in the denominator, so the curve can end below 1.
    """
    values = np.sort(np.asarray(list(errors), dtype=float))
    if values.size == 0:
        return []
    fractions = np.searchsorted(values, CDF_LEVELS, side="right") / values.size
    return [(float(level), float(frac)) for level, frac in zip(CDF_LEVELS, fractions)]


def area_above_curve(cdf: list[tuple[float, float]]) -> float | None:
    """``1 - integral of the CDF over [0, 1]`` with the trapezoidal rule."""
    if not cdf:
        return None
    levels, fractions = zip(*cdf)
    area = 1.0 - float(trapezoid(fractions, levels))
    return min(max(area, 0.0), 1.0)


def _mean(values: list[float]) -> float | None:
    return fmean(values) if values else None


def summarize(
    records: Iterable[QueryRecord],
    prep_times: Mapping[str, Mapping[str, float]] | None = None,
) -> list[SummaryCell]:
    """One :class:`SummaryCell` per (driver, data size, TR, workflow type)."""
    prep_times = prep_times or {}
    groups: dict[tuple, list[QueryRecord]] = defaultdict(list)
    for r in records:
        wf_type = r.workflow_type or workflow_type_of(r.workflow)
        groups[(r.driver, r.data_size, r.time_req, wf_type)].append(r)

    cells = []
    for (driver, size, tr, wf_type), group in sorted(groups.items()):
        errors = [r.rel_error_avg for r in group if not r.tr_violated and r.rel_error_avg is not None]
        cdf = mre_cdf(errors)
        cells.append(
            SummaryCell(
                adapter=driver,
                data_size=size,
                time_req=tr,
                workflow_type=wf_type,
                queries=len(group),
                tr_violation_rate=sum(r.tr_violated for r in group) / len(group),
                mean_missing_bins=_mean([r.missing_bins for r in group if r.missing_bins is not None]),
                mre_count=len(errors),
                mre_cdf=cdf,
                area_above_curve=area_above_curve(cdf),
                prep_time=prep_times.get(driver, {}).get(size),
            )
        )
    return cells


def plot_summary(cells: list[SummaryCell], path: Path | str) -> Path:
    """One panel per (driver, TR) with a truncated MRE CDF per workflow type."""
    matplotlib.rcParams["svg.hashsalt"] = "vizbench"
    panels = sorted({(c.adapter, c.data_size, c.time_req) for c in cells})
    cols = max(len({p[2] for p in panels}), 1)
    rows = max(len({p[:2] for p in panels}), 1)
    fig, axes = plt.subplots(rows, cols, figsize=(3.2 * cols, 2.8 * rows), squeeze=False)
    row_of = {key: i for i, key in enumerate(sorted({p[:2] for p in panels}))}
    col_of = {tr: j for j, tr in enumerate(sorted({p[2] for p in panels}))}

    for ax in axes.flat:
        ax.set_xlim(0.0, 1.0)
        ax.set_ylim(0.0, 1.02)
        ax.grid(True, alpha=0.3)
    if not cells:
        axes[0][0].text(0.5, 0.5, "No queries recorded", ha="center", va="center")
    for cell in cells:
        ax = axes[row_of[(cell.adapter, cell.data_size)]][col_of[cell.time_req]]
        ax.set_title(f"{cell.adapter} {cell.data_size}, TR={cell.time_req / 1000:g}s", fontsize=9)
        if cell.mre_cdf:
            levels, fractions = zip(*cell.mre_cdf)
            label = f"{cell.workflow_type} ({cell.area_above_curve:.0%})"
            ax.plot(levels, fractions, label=label, linewidth=1.5)
            ax.legend(loc="lower right", fontsize=7)
    for ax in axes[-1]:
        ax.set_xlabel("mean relative error")
    for ax in axes[:, 0]:
        ax.set_ylabel("fraction of queries")
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out


def summary_report(
    records: list[QueryRecord],
    prep_times: Mapping[str, Mapping[str, float]] | None,
    out_dir: Path | str,
) -> list[SummaryCell]:
    """Write ``summary.json`` and ``summary.svg`` under ``out_dir``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cells = summarize(records, prep_times)
    document = {
        "cdf_levels": CDF_POINTS,
        "prep_times": {k: dict(v) for k, v in (prep_times or {}).items()},
        "cells": [c.to_dict() for c in cells],
    }
    with open(out / SUMMARY_JSON, "w", encoding="utf-8") as f:
        json.dump(document, f, indent=2)
    plot_summary(cells, out / SUMMARY_SVG)
    logger.info("Wrote summary of %d groups to %s", len(cells), out)
    return cells


def load_prep_times(path: Path | str) -> dict[str, dict[str, float]]:
    file_path = Path(path)
    if not file_path.exists():
        return {}
    with open(file_path, encoding="utf-8") as f:
        return json.load(f)


def save_prep_times(prep_times: Mapping[str, Mapping[str, float]], path: Path | str) -> None:
    """Merge ``prep_times`` into the ledger at ``path``."""
    merged = load_prep_times(path)
    for adapter, sizes in prep_times.items():
        merged.setdefault(adapter, {}).update(sizes)
    with open(path, "w", encoding="utf-8") as f:
        json.dump(merged, f, indent=2, sort_keys=True)
