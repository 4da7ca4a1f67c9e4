"""Tests for QueryScorer and the per-query quality metrics."""

import math
import random

import numpy as np
import pytest

from vizbench.model.results import BinValue, ResultTable
from vizbench.scoring import (
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


def table(values, margins=None):
    margins = margins or {}
    return ResultTable({(k,): BinValue(float(v), margins.get(k)) for k, v in values.items()})


def random_pair(seed, size=20):
    rng = random.Random(seed)
    truth = {i: rng.uniform(-50, 50) for i in range(size)}
    delivered = {i: v * rng.uniform(0.5, 1.5) for i, v in truth.items() if rng.random() < 0.8}
    margins = {i: rng.uniform(0, 10) for i in delivered}
    return table(delivered, margins), table(truth)


class TestMissingBins:
    def test_table_row_examples(self):
        truth = table({i: 1 for i in range(56)})
        delivered = table({i: 1 for i in range(38)})
        assert round(missing_bins(delivered, truth), 2) == 0.32
        truth = table({i: 1 for i in range(159)})
        delivered = table({i: 1 for i in range(82)})
        assert round(missing_bins(delivered, truth), 2) == 0.48

    def test_same_keys(self):
        t = table({"a": 1, "b": 2})
        assert missing_bins(t, t) == 0.0

    def test_spurious_bins_do_not_help(self):
        truth = table({"a": 1, "b": 2})
        delivered = table({"a": 1, "z": 9, "y": 3})
        assert missing_bins(delivered, truth) == 0.5
        assert spurious_bins(delivered, truth) == 2

    def test_empty_truth(self):
        assert missing_bins(table({}), table({})) == 0.0
        assert missing_bins(table({"a": 1}), table({})) is None


class TestRelativeError:
    def test_exact(self):
        t = table({"a": 4, "b": -2})
        assert mean_relative_error(t, t) == (0.0, 0.0, 0)

    def test_single_bin(self):
        mean, stdev, excluded = mean_relative_error(table({"b": 3}), table({"b": 2}))
        assert mean == 0.5
        assert stdev == 0.0
        assert excluded == 0

    def test_zero_truth_is_excluded(self):
        mean, _, excluded = mean_relative_error(table({"a": 1, "b": 3}), table({"a": 0, "b": 2}))
        assert mean == 0.5
        assert excluded == 1

    def test_no_shared_bins(self):
        assert mean_relative_error(table({"a": 1}), table({"b": 1})) == (None, None, 0)

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_per_bin_loop(self, seed):
        delivered, truth = random_pair(seed)
        errors = []
        for key in delivered:
            if key in truth and truth[key].estimate != 0:
                a = truth[key].estimate
                errors.append(abs(delivered[key].estimate - a) / abs(a))
        mean = sum(errors) / len(errors)
        stdev = math.sqrt(sum((e - mean) ** 2 for e in errors) / len(errors))
        got_mean, got_stdev, _ = mean_relative_error(delivered, truth)
        assert got_mean == pytest.approx(mean, abs=1e-12)
        assert got_stdev == pytest.approx(stdev, abs=1e-12)


class TestSmape:
    def test_exact(self):
        t = table({"a": 4, "b": 0})
        assert smape(t, t) == 0.0

    def test_zero_truth(self):
        assert smape(table({"b": 5}), table({"b": 0})) == 1.0

    def test_arithmetic(self):
        assert smape(table({"b": 1}), table({"b": 3})) == 0.5

    def test_bounded(self):
        delivered, truth = random_pair(3)
        assert 0.0 <= smape(delivered, truth) <= 1.0


class TestCosineDistance:
    def test_identical(self):
        t = table({"a": 3, "b": 4})
        assert cosine_distance(t, t) == pytest.approx(0.0, abs=1e-12)

    def test_disjoint_keys(self):
        assert cosine_distance(table({"a": 3}), table({"b": 4})) == 1.0

    def test_scale_invariant(self):
        truth = table({"a": 3, "b": 4, "c": 1})
        doubled = table({"a": 6, "b": 8, "c": 2})
        assert cosine_distance(doubled, truth) == pytest.approx(0.0, abs=1e-12)

    def test_zero_vectors(self):
        assert cosine_distance(table({}), table({})) == 0.0
        assert cosine_distance(table({"a": 0}), table({"a": 2})) == 1.0

    def test_missing_bins_count_as_zero(self):
        truth = table({"a": 1, "b": 1})
        assert cosine_distance(table({"a": 1}), truth) == pytest.approx(1 - 1 / math.sqrt(2))

    def test_opposed_signed_answers_stay_at_one(self):
        truth = table({"a": 5, "b": 3})
        assert cosine_distance(table({"a": -5, "b": -3}), truth) == 1.0
        assert cosine_distance(table({"a": -1, "b": 4}), truth) <= 1.0

    def test_bounded_for_signed_averages(self):
        for seed in range(200):
            delivered, truth = random_pair(seed)
            negated = table({k[0]: -v.estimate for k, v in delivered.bins.items()})
            assert 0.0 <= cosine_distance(negated, truth) <= 1.0


class TestMargins:
    def test_no_margins(self):
        assert margin_stats(table({"a": 1})) == (None, None)
        assert out_of_margin(table({"a": 1}), table({"a": 2})) is None

    def test_zero_margins(self):
        t = table({"a": 5, "b": 2}, {"a": 0.0, "b": 0.0})
        assert margin_stats(t) == (0.0, 0.0)
        assert out_of_margin(t, t) == 0

    def test_single_bin(self):
        assert margin_stats(table({"a": 10}, {"a": 1.0})) == (0.1, 0.0)

    def test_unbounded_and_zero_estimates_left_out(self):
        t = table({"a": 10, "b": 0, "c": 4}, {"a": 1.0, "b": 2.0, "c": math.inf})
        assert margin_stats(t) == (0.1, 0.0)

    def test_out_of_margin(self):
        assert out_of_margin(table({"a": 10}, {"a": 1.0}), table({"a": 12})) == 1
        assert out_of_margin(table({"a": 11.5}, {"a": 1.0}), table({"a": 12})) == 0


class TestBias:
    def test_exact(self):
        t = table({"a": 2, "b": 5})
        assert bias(t, t) == 1.0

    def test_over_estimation(self):
        truth = table({"a": 10, "b": 30})
        assert bias(table({"a": 11, "b": 33}), truth) == pytest.approx(1.1)

    def test_only_delivered_bins_count(self):
        assert bias(table({"a": 4}), table({"a": 2, "b": 100})) == 2.0

    def test_undefined(self):
        assert bias(table({"a": 1}), table({"a": 0})) is None
        assert bias(table({"a": 1}), table({"b": 1})) is None


class TestQueryScorer:
    def setup_method(self):
        self.scorer = QueryScorer()

    def test_exact_result(self):
        t = table({"a": 2, "b": 5})
        m = self.scorer.score_query(t, t, tr_violated=False)
        assert not m.tr_violated
        assert (m.bins_delivered, m.bins_in_gt) == (2, 2)
        assert m.missing_bins == 0.0
        assert m.mre_mean == 0.0
        assert m.cosine_distance == pytest.approx(0.0, abs=1e-12)
        assert m.margin_mean is None
        assert m.out_of_margin is None
        assert m.bias == 1.0

    def test_nothing_delivered(self):
        m = self.scorer.score_query(None, table({"a": 1, "b": 1}), tr_violated=True)
        assert m.tr_violated
        assert m.bins_delivered == 0
        assert m.bins_in_gt == 2
        assert m.missing_bins == 1.0
        assert m.mre_mean is None
        assert m.cosine_distance is None

    def test_nothing_delivered_empty_truth(self):
        m = self.scorer.score_query(None, table({}), tr_violated=True)
        assert m.missing_bins is None

    def test_approximate_result(self):
        delivered = table({"a": 9, "b": 22, "z": 1}, {"a": 2.0, "b": 1.0, "z": math.inf})
        truth = table({"a": 10, "b": 20, "c": 5})
        m = self.scorer.score_query(delivered, truth, tr_violated=False)
        assert m.missing_bins == pytest.approx(1 / 3)
        assert m.spurious_bins == 1
        assert m.mre_mean == pytest.approx(0.1)
        assert m.out_of_margin == 1
        assert m.bias == pytest.approx(31 / 30)
        assert m.to_dict()["bins_delivered"] == 3

    def test_metrics_ignore_bin_order(self):
        delivered, truth = random_pair(8)
        shuffled = ResultTable(dict(reversed(list(delivered.bins.items()))))
        one = self.scorer.score_query(delivered, truth, False).to_dict()
        two = self.scorer.score_query(shuffled, truth, False).to_dict()
        assert one.keys() == two.keys()
        for key in one:
            if isinstance(one[key], float):
                assert one[key] == pytest.approx(two[key], abs=1e-12)
            else:
                assert one[key] == two[key]


# ---------------------------------------------------------------------------
# Against plain numpy formulas on random pairs
# ---------------------------------------------------------------------------


def random_case(rng):
    """Small integer-valued pair with zeros, sign changes, spurious bins and odd margins."""
    size = int(rng.integers(0, 12))
    truth = {i: float(rng.integers(-5, 6)) for i in range(size)}
    delivered = {i: a + float(rng.integers(-3, 4)) for i, a in truth.items() if rng.random() < 0.8}
    for i in range(size, size + int(rng.integers(0, 3))):
        delivered[i] = float(rng.integers(-5, 6))
    margins = {}
    if rng.random() < 0.7:
        for i in delivered:
            draw = rng.random()
            margins[i] = None if draw < 0.1 else math.inf if draw < 0.2 else float(rng.uniform(0, 4))
    return table(delivered, margins), table(truth)


def shared_arrays(delivered, truth):
    keys = [k for k in delivered.bins if k in truth.bins]
    f = np.array([delivered.bins[k].estimate for k in keys], dtype=float)
    a = np.array([truth.bins[k].estimate for k in keys], dtype=float)
    return keys, f, a


def numpy_smape(delivered, truth):
    _, f, a = shared_arrays(delivered, truth)
    if f.size == 0:
        return None
    denom = np.abs(f) + np.abs(a)
    terms = np.divide(np.abs(f - a), denom, out=np.zeros_like(f), where=denom != 0)
    return float(terms.mean())


def numpy_cosine(delivered, truth):
    keys = sorted(set(delivered.bins) | set(truth.bins))
    f = np.array([delivered.bins[k].estimate if k in delivered.bins else 0.0 for k in keys])
    a = np.array([truth.bins[k].estimate if k in truth.bins else 0.0 for k in keys])
    norm_f, norm_a = np.linalg.norm(f), np.linalg.norm(a)
    if norm_f == 0 and norm_a == 0:
        return 0.0
    if norm_f == 0 or norm_a == 0:
        return 1.0
    return float(np.clip(1.0 - f @ a / (norm_f * norm_a), 0.0, 1.0))


def numpy_bias(delivered, truth):
    _, f, a = shared_arrays(delivered, truth)
    if f.size == 0 or a.sum() == 0:
        return None
    return float(f.sum() / a.sum())


def numpy_margin_stats(delivered):
    values = list(delivered.bins.values())
    if not any(v.margin is not None for v in values):
        return None, None
    relative = np.array(
        [v.margin / abs(v.estimate) for v in values if v.margin is not None and np.isfinite(v.margin) and v.estimate]
    )
    if relative.size == 0:
        return None, None
    return float(relative.mean()), float(relative.std())


def numpy_out_of_margin(delivered, truth):
    if not any(v.margin is not None for v in delivered.bins.values()):
        return None
    keys, f, a = shared_arrays(delivered, truth)
    m = np.array([delivered.bins[k].margin if delivered.bins[k].margin is not None else np.inf for k in keys])
    return int(np.count_nonzero(np.abs(f - a) > m))


def agrees(got, want):
    if want is None:
        return got is None
    return got == pytest.approx(want, rel=1e-12, abs=1e-12)


@pytest.fixture(scope="module")
def cases():
    rng = np.random.default_rng(10_000)
    return [random_case(rng) for _ in range(10_000)]


class TestAgainstNumpy:
    def test_smape(self, cases):
        for i, (delivered, truth) in enumerate(cases):
            got = smape(delivered, truth)
            assert agrees(got, numpy_smape(delivered, truth)), i
            assert got is None or 0.0 <= got <= 1.0

    def test_cosine_distance(self, cases):
        for i, (delivered, truth) in enumerate(cases):
            got = cosine_distance(delivered, truth)
            assert agrees(got, numpy_cosine(delivered, truth)), i
            assert 0.0 <= got <= 1.0

    def test_bias(self, cases):
        for i, (delivered, truth) in enumerate(cases):
            assert agrees(bias(delivered, truth), numpy_bias(delivered, truth)), i

    def test_margin_stats(self, cases):
        for i, (delivered, _) in enumerate(cases):
            mean, stdev = margin_stats(delivered)
            want_mean, want_stdev = numpy_margin_stats(delivered)
            assert agrees(mean, want_mean), i
            assert agrees(stdev, want_stdev), i

    def test_out_of_margin(self, cases):
        for i, (delivered, truth) in enumerate(cases):
            assert out_of_margin(delivered, truth) == numpy_out_of_margin(delivered, truth), i

    def test_missing_bins_bounded(self, cases):
        for delivered, truth in cases:
            got = missing_bins(delivered, truth)
            assert got is None or 0.0 <= got <= 1.0
