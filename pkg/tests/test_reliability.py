import numpy as np
import pytest

from breathkit import synth
from breathkit.reliability import (
    QualityParams,
    Verdict,
    assess,
    detect_flat_surface,
    flag_compromised,
)
from breathkit.respiration import estimate_session, preprocess_session
from breathkit.signal_core import Signal1D


def _iqr_fraction_oracle(values, fs, window_s, m):
    """Direct reimplementation of the flagging rule, window by window."""
    w = int(round(window_s * fs))
    flagged = np.zeros(values.size, dtype=bool)
    starts = list(range(0, values.size - w + 1, w))
    bounds = [(s, s + w) for s in starts]
    rem = values.size - len(starts) * w
    if rem >= w / 2:
        bounds.append((len(starts) * w, values.size))
    elif rem:
        bounds[-1] = (bounds[-1][0], values.size)
    for lo, hi in bounds:
        q1, q3 = np.percentile(values[lo:hi], [25, 75])
        iqr = q3 - q1
        flagged[lo:hi] = (values[lo:hi] > q3 + m * iqr) | (values[lo:hi] < q1 - m * iqr)
    return flagged


class TestFlagCompromised:
    def test_constant_signal_flags_nothing(self):
        sig = Signal1D(10.0, np.full(600, 0.5))
        assert flag_compromised(sig) == 0.0

    def test_spiked_region_is_flagged_where_expected(self):
        # +-10 g spikes at 40% density inside two 20 s windows, on a 0.01 g
        # sinusoid: the window quartiles stay at breathing scale (each spike
        # sign is under a quarter of its window), so every spike is flagged.
        fs = 10.0
        t = np.arange(2000) / fs  # 200 s
        values = 0.01 * np.sin(2 * np.pi * 0.1 * t)
        spike_idx = np.sort(np.concatenate([np.arange(600, 1000, 5),
                                            np.arange(602, 1000, 5)]))
        values[spike_idx[0::2]] = 10.0
        values[spike_idx[1::2]] = -10.0
        sig = Signal1D(fs, values)
        fraction = flag_compromised(sig)
        assert fraction >= 0.05
        oracle = _iqr_fraction_oracle(values, fs, 20.0, 0.8)
        assert fraction == pytest.approx(oracle.mean())
        assert not oracle[:600].any() and not oracle[1000:].any()

    def test_synth_burst_coverage_over_quarter_compromises(self):
        # 5/min x 4 s evenly spaced = 1/3 of samples inside bursts at 20x
        # breathing amplitude
        profile = synth.SynthProfile(
            duration_s=300.0, rate_profile=((0.0, 6.0),),
            burst_rate_per_min=5.0, burst_amplitude_g=0.4, burst_duration_s=4.0,
            burst_schedule="regular", seed=21,
        )
        rec, _ = synth.generate(profile)
        report, estimate = estimate_session(rec)
        assert report.compromised_fraction > 0.25
        assert report.verdict is Verdict.SIGNAL_COMPROMISED
        assert estimate is None

    def test_too_short_signal_rejected(self):
        with pytest.raises(ValueError):
            flag_compromised(Signal1D(10.0, np.zeros(100)))

    def test_multiplier_monotonicity(self, rng):
        values = rng.normal(0.0, 1.0, 3000)
        sig = Signal1D(10.0, values)
        fractions = [
            flag_compromised(sig, QualityParams(iqr_multiplier=m))
            for m in (0.4, 0.6, 0.8, 1.0, 1.2)
        ]
        assert all(a >= b for a, b in zip(fractions, fractions[1:]))


class TestFlatSurface:
    def test_constant_is_flat(self):
        sig = Signal1D(10.0, np.full(3000, 1.0))
        is_flat, flat_fraction = detect_flat_surface(sig)
        assert is_flat
        assert flat_fraction == 1.0

    def test_alternating_segment_means_not_flat(self):
        # 30 s segments alternating 0 and 0.05 g: every mean deviates by
        # 0.025 from the 0.025 global mean, above the 0.02 threshold.
        seg = int(30 * 10)
        values = np.concatenate([np.full(seg, 0.0 if k % 2 == 0 else 0.05) for k in range(10)])
        is_flat, flat_fraction = detect_flat_surface(Signal1D(10.0, values))
        assert not is_flat
        assert flat_fraction == 0.0

    def test_synth_chest_session_with_drift_not_flat(self, clean_6bpm):
        rec, _ = clean_6bpm
        raw, _ = preprocess_session(rec)
        is_flat, _ = detect_flat_surface(raw)
        assert not is_flat

    def test_flat_decoy_detected(self):
        rec, _ = synth.generate(synth.SynthProfile(duration_s=300.0, flat_decoy=True, seed=9))
        raw, _ = preprocess_session(rec)
        is_flat, _ = detect_flat_surface(raw)
        assert is_flat

    def test_scale_awareness(self):
        # a non-flat signal scaled up cannot become flat
        seg = int(30 * 10)
        values = np.concatenate([np.full(seg, 0.0 if k % 2 == 0 else 0.05) for k in range(10)])
        for scale in (1.0, 10.0):
            is_flat, _ = detect_flat_surface(Signal1D(10.0, values * scale))
            assert not is_flat


class TestAssess:
    def _spiky_flat(self, spike_fraction):
        """Flat baseline with sign-alternating spikes at the given density."""
        n = 3000
        values = np.zeros(n)
        idx = np.linspace(0, n - 1, int(n * spike_fraction)).astype(int)
        values[idx[0::2]] = 10.0
        values[idx[1::2]] = -10.0
        return values

    def test_flat_takes_precedence_over_compromised(self):
        values = self._spiky_flat(0.26)
        sig = Signal1D(10.0, values)
        report = assess(sig, sig)
        assert report.compromised_fraction > 0.25
        assert report.verdict is Verdict.NOT_ON_CHEST

    def _with_drift(self, values):
        t = np.arange(values.size) / 10.0
        return values + 0.5 * np.sin(2 * np.pi * t / 150.0)

    def test_ok_at_ten_percent(self):
        values = self._with_drift(self._spiky_flat(0.10))
        report = assess(Signal1D(10.0, values), Signal1D(10.0, values))
        assert report.verdict is Verdict.OK
        assert report.compromised_fraction == pytest.approx(0.10, abs=0.02)

    def test_compromised_at_thirty_percent(self):
        values = self._with_drift(self._spiky_flat(0.30))
        report = assess(Signal1D(10.0, values), Signal1D(10.0, values))
        assert report.verdict is Verdict.SIGNAL_COMPROMISED
        assert report.compromised_fraction == pytest.approx(0.30, abs=0.02)

    def test_span_mismatch_rejected(self):
        with pytest.raises(ValueError):
            assess(Signal1D(10.0, np.zeros(3000)), Signal1D(10.0, np.zeros(2000)))

    def test_every_verdict_reachable_and_unique(self):
        seen = set()
        flat = Signal1D(10.0, np.zeros(3000))
        seen.add(assess(flat, flat).verdict)
        drifty = self._with_drift(np.zeros(3000))
        seen.add(assess(Signal1D(10.0, drifty), Signal1D(10.0, drifty)).verdict)
        bad = self._with_drift(self._spiky_flat(0.30))
        seen.add(assess(Signal1D(10.0, bad), Signal1D(10.0, bad)).verdict)
        assert seen == {Verdict.NOT_ON_CHEST, Verdict.OK, Verdict.SIGNAL_COMPROMISED}
