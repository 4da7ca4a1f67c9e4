"""Per-query benchmark records."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from vizbench.model.viz import WORKFLOW_TYPES
from vizbench.scoring.metrics import MetricSet

# Column order of the detailed report.
TABLE_COLUMNS = [
    "id",
    "interaction",
    "viz_name",
    "driver",
    "data_size",
    "think_time",
    "time_req",
    "workflow",
    "start_time",
    "end_time",
    "tr_violated",
    "bin_dims",
    "binning_type",
    "agg_type",
    "bins_ofm",
    "bins_delivered",
    "bins_in_gt",
    "rel_error_avg",
    "rel_error_stdev",
    "missing_bins",
    "cosine_distance",
    "margin_avg",
    "margin_stdev",
]

EXTRA_COLUMNS = [
    "workflow_type",
    "smape",
    "bias",
    "spurious_bins",
    "mre_excluded",
    "progress",
    "error",
]


@dataclass
class QueryRecord:
    """One issued query. Times are epoch milliseconds, durations milliseconds."""

    id: int
    interaction: int
    viz_name: str
    driver: str
    data_size: str
    think_time: int
    time_req: int
    workflow: str
    start_time: int
    end_time: int
    tr_violated: bool
    bin_dims: int
    binning_type: str
    agg_type: str
    bins_ofm: int | None = None
    bins_delivered: int = 0
    bins_in_gt: int = 0
    rel_error_avg: float | None = None
    rel_error_stdev: float | None = None
    missing_bins: float | None = None
    cosine_distance: float | None = None
    margin_avg: float | None = None
    margin_stdev: float | None = None
    workflow_type: str = ""
    smape: float | None = None
    bias: float | None = None
    spurious_bins: int = 0
    mre_excluded: int = 0
    progress: float | None = None
    error: str | None = None

    def apply_metrics(self, metrics: MetricSet) -> None:
        self.tr_violated = metrics.tr_violated
        self.bins_ofm = metrics.out_of_margin
        self.bins_delivered = metrics.bins_delivered
        self.bins_in_gt = metrics.bins_in_gt
        self.rel_error_avg = metrics.mre_mean
        self.rel_error_stdev = metrics.mre_stdev
        self.missing_bins = metrics.missing_bins
        self.cosine_distance = metrics.cosine_distance
        self.margin_avg = metrics.margin_mean
        self.margin_stdev = metrics.margin_stdev
        self.smape = metrics.smape
        self.bias = metrics.bias
        self.spurious_bins = metrics.spurious_bins
        self.mre_excluded = metrics.mre_excluded

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "QueryRecord":
        names = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in names})


def workflow_type_of(workflow: str) -> str:
    """``mixed_2`` -> ``mixed``, ``one-to-n_my_session`` -> ``one-to-n``.

    The workflow column carries its type as a prefix (see ``workflow_label``);
    names outside that convention fall back to stripping a numeric suffix.
    """
    for wf_type in sorted(WORKFLOW_TYPES, key=len, reverse=True):
        if workflow == wf_type or workflow.startswith(wf_type + "_"):
            return wf_type
    head, _, tail = workflow.rpartition("_")
    return head if head and tail.isdigit() else workflow


def workflow_label(name: str, wf_type: str) -> str:
    """Workflow column value for a run: the name, prefixed with its type unless it already is."""
    if workflow_type_of(name) == wf_type:
        return name
    return f"{wf_type}_{name}"
