"""Result-quality metrics: a delivered result F against the ground truth A.

Per-bin errors (relative error, SMAPE, out-of-margin, bias) are taken
over the bins present in both F and A. Bins delivered but absent from
the truth are only counted as spurious. Undefined values are ``None``.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import asdict, dataclass

from vizbench.model.results import BinKey, ResultTable


def _shared(delivered: ResultTable, truth: ResultTable) -> list[BinKey]:
    # delivered order keeps float sums reproducible across runs
    return [key for key in delivered if key in truth]


# ---------------------------------------------------------------------------
# Coverage
# ---------------------------------------------------------------------------


def missing_bins(delivered: ResultTable, truth: ResultTable) -> float | None:
    """Fraction of truth bins absent from the delivered result."""
    truth_keys = truth.keys()
    if not truth_keys:
        return 0.0 if len(delivered) == 0 else None
    return len(truth_keys - delivered.keys()) / len(truth_keys)


def spurious_bins(delivered: ResultTable, truth: ResultTable) -> int:
    return len(delivered.keys() - truth.keys())


# ---------------------------------------------------------------------------
# Error
# ---------------------------------------------------------------------------


def mean_relative_error(
    delivered: ResultTable, truth: ResultTable
) -> tuple[float | None, float | None, int]:
    """Mean and population stdev of |F - A| / |A|, plus the number of
    bins skipped because A = 0."""
    errors = []
    excluded = 0
    for key in _shared(delivered, truth):
        actual = truth[key].estimate
        if actual == 0:
            excluded += 1
            continue
        errors.append(abs(delivered[key].estimate - actual) / abs(actual))
    if not errors:
        return None, None, excluded
    return statistics.fmean(errors), statistics.pstdev(errors), excluded


def smape(delivered: ResultTable, truth: ResultTable) -> float | None:
    """Mean of |F - A| / (|F| + |A|); a bin with F = A = 0 contributes 0."""
    terms = []
    for key in _shared(delivered, truth):
        f, a = delivered[key].estimate, truth[key].estimate
        denom = abs(f) + abs(a)
        terms.append(0.0 if denom == 0 else abs(f - a) / denom)
    return statistics.fmean(terms) if terms else None


def cosine_distance(delivered: ResultTable, truth: ResultTable) -> float:
    """1 - cos(F, A) over the union of bins, missing bins set to zero.

    Two all-zero vectors are at distance 0; one all-zero vector is at
    distance 1 from anything else. Signed aggregates (AVG of a delay) can
    point the vectors apart; the distance stays in [0, 1], so opposed
    answers score like orthogonal ones.
    """
    keys = list(truth) + [k for k in delivered if k not in truth]
    f = [delivered[k].estimate if k in delivered else 0.0 for k in keys]
    a = [truth[k].estimate if k in truth else 0.0 for k in keys]
    norm_f = math.sqrt(math.fsum(x * x for x in f))
    norm_a = math.sqrt(math.fsum(x * x for x in a))
    if norm_f == 0 and norm_a == 0:
        return 0.0
    if norm_f == 0 or norm_a == 0:
        return 1.0
    dot = math.fsum(x * y for x, y in zip(f, a))
    return min(max(0.0, 1.0 - dot / (norm_f * norm_a)), 1.0)


def bias(delivered: ResultTable, truth: ResultTable) -> float | None:
    """Σ F / Σ A over the shared bins."""
    keys = _shared(delivered, truth)
    if not keys:
        return None
    denom = math.fsum(truth[k].estimate for k in keys)
    if denom == 0:
        return None
    return math.fsum(delivered[k].estimate for k in keys) / denom


# ---------------------------------------------------------------------------
# Margins
# ---------------------------------------------------------------------------


def margin_stats(delivered: ResultTable) -> tuple[float | None, float | None]:
    """Mean and population stdev of margin / |F|.

    Bins with F = 0 or an unbounded margin are left out.
    """
    if not delivered.has_margins:
        return None, None
    relative = [
        v.margin / abs(v.estimate)
        for v in delivered.bins.values()
        if v.margin is not None and not v.unbounded and v.estimate != 0
    ]
    if not relative:
        return None, None
    return statistics.fmean(relative), statistics.pstdev(relative)


def out_of_margin(delivered: ResultTable, truth: ResultTable) -> int | None:
    """Shared bins whose error exceeds the reported margin."""
    if not delivered.has_margins:
        return None
    count = 0
    for key in _shared(delivered, truth):
        value = delivered[key]
        if value.margin is not None and abs(value.estimate - truth[key].estimate) > value.margin:
            count += 1
    return count


# ---------------------------------------------------------------------------
# Scoring
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MetricSet:
    tr_violated: bool
    bins_delivered: int
    bins_in_gt: int
    missing_bins: float | None
    spurious_bins: int
    mre_mean: float | None
    mre_stdev: float | None
    mre_excluded: int
    smape: float | None
    cosine_distance: float | None
    margin_mean: float | None
    margin_stdev: float | None
    out_of_margin: int | None
    bias: float | None

    def to_dict(self) -> dict:
        return asdict(self)


class QueryScorer:
    """Score delivered query results against ground truth."""

    def score_query(
        self, delivered: ResultTable | None, truth: ResultTable, tr_violated: bool
    ) -> MetricSet:
        """All metrics for one query.

        Parameters
        ----------
        delivered : ResultTable or None
            What the adapter returned; ``None`` when nothing was fetched
            before the deadline.
        truth : ResultTable
            Exact result of the same query.
        tr_violated : bool
            Whether the query missed its time requirement.

        Returns
        -------
        MetricSet
            Without a delivered result every truth bin counts as missing
            and the error metrics are undefined.
        """
        if delivered is None:
            return MetricSet(
                tr_violated=tr_violated,
                bins_delivered=0,
                bins_in_gt=len(truth),
                missing_bins=1.0 if len(truth) else None,
                spurious_bins=0,
                mre_mean=None,
                mre_stdev=None,
                mre_excluded=0,
                smape=None,
                cosine_distance=None,
                margin_mean=None,
                margin_stdev=None,
                out_of_margin=None,
                bias=None,
            )

        mre, mre_std, excluded = mean_relative_error(delivered, truth)
        margin_mean, margin_std = margin_stats(delivered)
        return MetricSet(
            tr_violated=tr_violated,
            bins_delivered=len(delivered),
            bins_in_gt=len(truth),
            missing_bins=missing_bins(delivered, truth),
            spurious_bins=spurious_bins(delivered, truth),
            mre_mean=mre,
            mre_stdev=mre_std,
            mre_excluded=excluded,
            smape=smape(delivered, truth),
            cosine_distance=cosine_distance(delivered, truth),
            margin_mean=margin_mean,
            margin_stdev=margin_std,
            out_of_margin=out_of_margin(delivered, truth),
            bias=bias(delivered, truth),
        )
