from vizbench.scoring.metrics import (
    MetricSet,
    QueryScorer,
    bias,
    cosine_distance,
    margin_stats,
    mean_relative_error,
    missing_bins,
    out_of_margin,
    smape,
    spurious_bins,
)
