"""Detailed per-query report: one CSV row per issued query."""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Iterable

import pandas as pd

from vizbench.driver.records import EXTRA_COLUMNS, TABLE_COLUMNS, QueryRecord, workflow_type_of

logger = logging.getLogger(__name__)

DETAILED_CSV = "detailed.csv"
DETAILED_JSON = "detailed.json"

INT_COLUMNS = {
    "id",
    "interaction",
    "think_time",
    "time_req",
    "start_time",
    "end_time",
    "bin_dims",
    "bins_ofm",
    "bins_delivered",
    "bins_in_gt",
    "spurious_bins",
    "mre_excluded",
}
FLOAT_COLUMNS = {
    "rel_error_avg",
    "rel_error_stdev",
    "missing_bins",
    "cosine_distance",
    "margin_avg",
    "margin_stdev",
    "smape",
    "bias",
    "progress",
}
_TEXT_COLUMNS = {"viz_name", "driver", "data_size", "workflow", "binning_type", "agg_type"}


def _two_decimals(value) -> str:
    if value is None or pd.isna(value):
        return ""
    return f"{value:.2f}"


def detailed_frame(records: Iterable[QueryRecord]) -> pd.DataFrame:
    """The CSV layout as a frame of strings and integers."""
    frame = pd.DataFrame([r.to_dict() for r in records], columns=TABLE_COLUMNS)
    frame["tr_violated"] = frame["tr_violated"].map(lambda v: "TRUE" if v else "FALSE")
    frame["bins_ofm"] = frame["bins_ofm"].astype("Int64")
    for column in FLOAT_COLUMNS.intersection(TABLE_COLUMNS):
        frame[column] = frame[column].map(_two_decimals)
    return frame


def detailed_report(records: list[QueryRecord], out: Path | str) -> Path:
    """Write the detailed CSV and its full-precision JSON sibling.

    ``out`` is either the CSV path itself (``runs/records.csv`` next to
    ``runs/records.json``) or a directory that receives ``detailed.csv``
    and ``detailed.json``.

    Returns
    -------
    Path of the CSV file.
    """
    out = Path(out)
    if out.suffix == ".csv":
        csv_path, json_path = out, out.with_suffix(".json")
    else:
        csv_path, json_path = out / DETAILED_CSV, out / DETAILED_JSON
    csv_path.parent.mkdir(parents=True, exist_ok=True)
    detailed_frame(records).to_csv(csv_path, index=False, na_rep="")
    with open(json_path, "w", encoding="utf-8") as f:
        json.dump([r.to_dict() for r in records], f, indent=1)
    logger.info("Wrote %d records to %s", len(records), csv_path)
    return csv_path


def _cell(column: str, value):
    if column == "tr_violated":
        return str(value).strip().upper() == "TRUE"
    if value is None or (not isinstance(value, str) and pd.isna(value)):
        return None
    if column in INT_COLUMNS:
        return int(value)
    if column in FLOAT_COLUMNS:
        return float(value)
    return str(value)


def read_detailed(path: Path | str) -> list[QueryRecord]:
    """Load records from a detailed CSV or its JSON sibling.

    Reading the CSV gives values at the precision it was written with;
    the extra fields that only the JSON carries are left at their
    defaults, except the workflow type which is derived from the name.
    """
    file_path = Path(path)
    if not file_path.exists():
        raise FileNotFoundError(f"File not found: {file_path}")
    if file_path.suffix == ".json":
        with open(file_path, encoding="utf-8") as f:
            return [QueryRecord.from_dict(d) for d in json.load(f)]

    frame = pd.read_csv(
        file_path,
        dtype={c: str for c in _TEXT_COLUMNS},
        keep_default_na=False,
        na_values=[""],
    )
    missing = [c for c in TABLE_COLUMNS if c not in frame.columns]
    if missing:
        raise ValueError(f"{file_path} lacks columns {missing}")
    records = []
    for row in frame.to_dict(orient="records"):
        d = {c: _cell(c, row[c]) for c in TABLE_COLUMNS}
        for column in EXTRA_COLUMNS:
            if column in row:
                d[column] = _cell(column, row[column])
        if not d.get("workflow_type"):
            d["workflow_type"] = workflow_type_of(d["workflow"])
        records.append(QueryRecord.from_dict(d))
    return records
