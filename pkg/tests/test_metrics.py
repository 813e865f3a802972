import numpy as np
import pytest

from breathkit.metrics import (
    AlignedPairs,
    agreement,
    align,
    bland_altman_points,
    classification_metrics,
)
from breathkit.session_io import RateSeries


def _series(t, bpm):
    return RateSeries(np.asarray(t, float), np.asarray(bpm, float))


class TestAlign:
    def test_identical_grids_pair_everything(self):
        gt = _series([0, 1, 2, 3], [6, 6, 7, 7])
        est = _series([0, 1, 2, 3], [6, 7, 7, 8])
        pairs = align(gt, est)
        assert len(pairs) == 4
        assert pairs.n_dropped == 0
        assert np.array_equal(pairs.gt, gt.bpm)

    def test_within_tolerance_pairs(self):
        gt = _series([33.0, 100.0], [6, 7])
        est = _series([30.0], [6.5])
        pairs = align(gt, est, tolerance_s=5.0)
        assert len(pairs) == 1
        assert pairs.gt[0] == 6.0

    def test_outside_tolerance_dropped(self):
        gt = _series([40.0, 100.0], [6, 7])
        est = _series([30.0, 99.0], [6.5, 7.5])
        pairs = align(gt, est, tolerance_s=5.0)
        assert len(pairs) == 1
        assert pairs.n_dropped == 1
        assert pairs.est[0] == 7.5

    def test_zero_pairs_is_an_error(self):
        gt = _series([100.0, 200.0], [6, 7])
        est = _series([0.0], [6.0])
        with pytest.raises(ValueError):
            align(gt, est, tolerance_s=5.0)

    def test_empty_series_rejected(self):
        gt = _series([0.0], [6.0])
        with pytest.raises(ValueError):
            align(gt, RateSeries(np.empty(0), np.empty(0)))


class TestAgreement:
    def test_identity_estimate(self):
        pairs = align(_series([0, 1, 2], [6, 8, 10]), _series([0, 1, 2], [6, 8, 10]))
        rep = agreement(pairs)
        assert rep.mae == 0.0
        assert rep.pcc == pytest.approx(1.0)
        assert rep.bland_altman.mean_diff == 0.0
        assert rep.n == 3

    def test_hand_computed_example(self):
        pairs = align(_series([0, 1, 2], [10, 12, 14]), _series([0, 1, 2], [11, 14, 15]))
        rep = agreement(pairs)
        assert rep.mae == pytest.approx(4.0 / 3.0)
        diffs = np.array([1.0, 2.0, 1.0])
        sd = float(np.std(diffs, ddof=1))
        assert rep.bland_altman.mean_diff == pytest.approx(4.0 / 3.0)
        assert rep.bland_altman.loa_low == pytest.approx(4.0 / 3.0 - 1.96 * sd)
        assert rep.bland_altman.loa_high == pytest.approx(4.0 / 3.0 + 1.96 * sd)

    def test_perfect_negative_correlation(self):
        gt = _series([0, 1, 2, 3], [8, 10, 12, 14])
        est = _series([0, 1, 2, 3], [30 - 8, 30 - 10, 30 - 12, 30 - 14])
        rep = agreement(align(gt, est))
        assert rep.pcc == pytest.approx(-1.0)

    def test_constant_series_has_no_pcc(self):
        rep = agreement(align(_series([0, 1], [6, 6]), _series([0, 1], [6, 7])))
        assert rep.pcc is None
        assert rep.pcc_undefined_reason

    def test_per_band_buckets(self):
        gt = _series([0, 1, 2, 3], [5, 9, 12, 20])
        est = _series([0, 1, 2, 3], [6, 9, 13, 22])
        rep = agreement(align(gt, est))
        assert rep.per_band["4-9"]["n"] == 2
        assert rep.per_band["9-15"]["n"] == 1
        assert rep.per_band["15-30"]["n"] == 1
        assert rep.per_band["4-9"]["mae"] == pytest.approx(0.5)

    def test_loa_coverage_on_gaussian_diffs(self, rng):
        n = 10000
        gt = rng.uniform(5, 25, n)
        est = gt + rng.normal(0.3, 1.0, n)
        t = np.arange(n, dtype=float)
        pairs = AlignedPairs(t=t, gt=gt, est=est, n_dropped=0)
        rep = agreement(pairs)
        diffs = est - gt
        inside = np.mean((diffs >= rep.bland_altman.loa_low) & (diffs <= rep.bland_altman.loa_high))
        assert inside == pytest.approx(0.95, abs=0.02)

    def test_bland_altman_points_shape(self):
        pairs = align(_series([0, 1], [6, 8]), _series([0, 1], [7, 9]))
        pts = bland_altman_points(pairs)
        assert pts.shape == (2, 3)
        assert pts[0, 1] == pytest.approx(6.5)
        assert pts[0, 2] == pytest.approx(1.0)


class TestClassificationMetrics:
    def test_perfect_prediction(self):
        rep = classification_metrics([1, 0, 1, 0], [1, 0, 1, 0])
        assert (rep.precision, rep.recall, rep.f1) == (1.0, 1.0, 1.0)

    def test_all_positive_on_balanced(self):
        rep = classification_metrics([1, 1, 0, 0], [1, 1, 1, 1])
        assert rep.recall == 1.0
        assert rep.precision == 0.5
        assert rep.f1 == pytest.approx(2.0 / 3.0)

    def test_hand_counts(self):
        gt = [1] * 10 + [0] * 10
        pred = [1] * 8 + [0] * 2 + [1] * 2 + [0] * 8
        rep = classification_metrics(gt, pred)
        assert (rep.tp, rep.fp, rep.fn, rep.tn) == (8, 2, 2, 8)
        assert rep.precision == pytest.approx(0.8)
        assert rep.recall == pytest.approx(0.8)
        assert rep.f1 == pytest.approx(0.8)

    def test_zero_denominators_reported_absent(self):
        rep = classification_metrics([0, 0], [0, 0])
        assert rep.precision is None and rep.recall is None and rep.f1 is None
        assert rep.tn == 2

    def test_length_mismatch_rejected(self):
        with pytest.raises(ValueError):
            classification_metrics([1, 0], [1])

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError):
            classification_metrics([1, 2], [1, 0])

    def test_counts_sum_to_n(self):
        rep = classification_metrics([1, 0, 1, 1], [0, 0, 1, 1])
        assert rep.n == 4
