import numpy as np
import pytest

from breathkit_trainer.data import (
    SegmentDataset,
    rebalance,
    split_indices,
    standardize,
    stratified_split,
)


def _dataset(n0, n1, width=40):
    n = n0 + n1
    rng = np.random.default_rng(n)
    return SegmentDataset(
        segments=rng.normal(size=(n, 3, width)).astype(np.float32),
        labels=np.array([0] * n0 + [1] * n1, dtype=np.int64),
    )


class TestRebalance:
    def test_published_concentration_counts(self):
        ds = rebalance(_dataset(374, 287), seed=0)
        assert ds.class_counts() == (374, 374)

    def test_published_equanimity_counts(self):
        ds = rebalance(_dataset(282, 379), seed=0)
        assert ds.class_counts() == (379, 379)

    def test_balanced_is_noop(self):
        ds = _dataset(100, 100)
        out = rebalance(ds, seed=0)
        assert out is ds

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            rebalance(_dataset(10, 0), seed=0)

    def test_only_multiplicity_changes(self):
        ds = _dataset(5, 12)
        out = rebalance(ds, seed=3)
        originals = {ds.segments[i].tobytes() for i in range(len(ds))}
        for i in range(len(out)):
            assert out.segments[i].tobytes() in originals

    def test_deterministic(self):
        ds = _dataset(5, 12)
        a = rebalance(ds, seed=4)
        b = rebalance(ds, seed=4)
        assert np.array_equal(a.segments, b.segments)


class TestSplit:
    def test_stratified_proportions(self):
        ds = _dataset(50, 50)
        train, val = stratified_split(ds, 0.2, seed=0)
        assert len(val) == 20
        assert int(np.sum(val.labels == 0)) == 10
        assert len(train) == 80

    def test_disjoint_indices(self):
        train_idx, val_idx = split_indices(np.array([0, 1] * 25), 0.2, seed=1)
        assert len(np.intersect1d(train_idx, val_idx)) == 0
        assert len(train_idx) + len(val_idx) == 50


class TestStandardize:
    def test_zero_mean_unit_variance(self):
        rng = np.random.default_rng(0)
        seg = rng.normal(3.0, 2.0, size=(3, 1000))
        out = standardize(seg)
        assert out.mean(axis=1) == pytest.approx(np.zeros(3), abs=1e-12)
        assert out.std(axis=1) == pytest.approx(np.ones(3), rel=1e-6)

    def test_constant_channel_goes_to_zero(self):
        seg = np.ones((3, 100))
        assert np.allclose(standardize(seg), 0.0)
