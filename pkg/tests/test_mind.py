import json
import os

import numpy as np
import pytest

from breathkit import synth
from breathkit.mind import (
    SKILLS,
    predict_session,
    segment,
    standardize_segment,
    vote,
)
from breathkit.network import NetworkSpec, forward
from breathkit.session_io import SessionRecording
from breathkit.weights import random_bundle, read_weights

FIXTURE_DIR = os.path.join(os.path.dirname(__file__), "fixtures", "mind")


def _recording(duration_s, fs=100.0, seed=0):
    rng = np.random.default_rng(seed)
    n = int(duration_s * fs)
    t = np.arange(n) / fs
    xyz = rng.normal(0.0, 0.01, size=(n, 3)) + np.array([0.0, 0.0, 1.0])
    return SessionRecording("seg-test", fs, t, xyz)


class TestSegment:
    def test_ten_minutes_makes_five_segments(self):
        segs = segment(_recording(600.0))
        assert segs.shape == (5, 3, 12000)

    def test_five_minutes_makes_two_segments(self):
        segs = segment(_recording(300.0))
        assert segs.shape[0] == 2  # trailing 60 s discarded

    def test_short_session_rejected(self):
        with pytest.raises(ValueError, match="120"):
            segment(_recording(119.0))

    def test_constant_channel_standardized_to_zeros(self):
        rec = _recording(120.0)
        rec.xyz[:, 1] = 0.5
        segs = segment(rec)
        assert np.allclose(segs[0, 1], 0.0)

    def test_segments_are_standardized(self):
        segs = segment(_recording(240.0, seed=3))
        assert segs.mean(axis=2) == pytest.approx(np.zeros((2, 3)), abs=1e-12)
        assert segs.std(axis=2) == pytest.approx(np.ones((2, 3)), rel=1e-3)


class TestStandardize:
    def test_idempotent(self, rng):
        seg = rng.normal(2.0, 3.0, size=(3, 500))
        once = standardize_segment(seg)
        twice = standardize_segment(once)
        assert np.max(np.abs(twice - once)) < 1e-6


class TestVote:
    def test_majority_improves(self):
        assert vote([1, 1, 0]) == "improved"

    def test_tie_is_not_improved(self):
        assert vote([1, 0]) == "not_improved"

    def test_single_negative_majority(self):
        assert vote([0, 0, 0, 1]) == "not_improved"

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            vote([])


class TestPredictSession:
    def _bundles(self, spec, base_seed=0):
        return {s: random_bundle(spec, seed=base_seed + i) for i, s in enumerate(SKILLS)}

    def test_ten_minute_session_shapes(self):
        spec = NetworkSpec.default()
        rec = _recording(600.0, seed=5)
        pred = predict_session(rec, self._bundles(spec))
        assert set(pred.skills) == set(SKILLS)
        for res in pred.skills.values():
            assert len(res.segment_probs) == 5
            assert all(0.0 < p < 1.0 for p in res.segment_probs)
            assert res.votes[0] + res.votes[1] == 5

    def test_too_short_session_rejected(self):
        spec = NetworkSpec.default()
        with pytest.raises(ValueError):
            predict_session(_recording(119.0), self._bundles(spec))

    def test_missing_bundle_rejected(self):
        spec = NetworkSpec.default()
        bundles = self._bundles(spec)
        del bundles["equanimity"]
        with pytest.raises(ValueError, match="equanimity"):
            predict_session(_recording(240.0), bundles)


@pytest.mark.skipif(not os.path.isdir(FIXTURE_DIR), reason="trained fixtures not generated")
class TestTrainedFixtures:
    """Cross-component checks against reference outputs exported by the trainer."""

    def _load(self):
        with open(os.path.join(FIXTURE_DIR, "reference.json"), encoding="utf-8") as fh:
            reference = json.load(fh)
        data = np.load(os.path.join(FIXTURE_DIR, "segments.npz"))
        return reference, data["segments"]

    def test_forward_matches_trainer_reference(self):
        reference, segments = self._load()
        bundle = read_weights(os.path.join(FIXTURE_DIR, reference["bundle"]))
        for i, expected in enumerate(reference["probs"]):
            seg = standardize_segment(segments[i].astype(np.float64))
            got = forward(bundle.spec, bundle.tensors, seg)
            assert got == pytest.approx(expected, abs=1e-4)

    def test_trained_bundles_classify_slow_steady_session_as_improved(self):
        bundles = {
            skill: read_weights(os.path.join(FIXTURE_DIR, f"{skill}.bkw"))
            for skill in SKILLS
        }
        profile = synth.SynthProfile(
            duration_s=600.0,
            rate_profile=tuple((float(k * 30), 6.0 + 0.4 * (k % 3)) for k in range(20)),
            rate_interp="ramp",
            seed=20260301,
        )
        rec, _ = synth.generate(profile)
        pred = predict_session(rec, bundles)
        for skill in SKILLS:
            assert pred.skills[skill].session_label == "improved", skill
