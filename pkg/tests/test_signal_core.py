import numpy as np
import pytest

from breathkit import synth
from breathkit.session_io import SessionRecording
from breathkit.signal_core import (
    Signal1D,
    butterworth_lowpass,
    local_mean_removal,
    moving_average,
    resample_uniform,
    select_axis,
)


def _recording(xyz, fs=100.0):
    n = xyz.shape[0]
    return SessionRecording("test", fs, np.arange(n) / fs, xyz)


class TestSelectAxis:
    def test_max_variance_picks_sinusoidal_axis(self):
        t = np.arange(1000) / 100.0
        xyz = np.column_stack([np.full_like(t, 0.1), np.full_like(t, 0.2), np.sin(t)])
        sig = select_axis(_recording(xyz), "max-variance")
        assert np.array_equal(sig.values, xyz[:, 2])

    def test_fixed_z_ignores_content(self):
        t = np.arange(1000) / 100.0
        xyz = np.column_stack([np.sin(t), np.cos(t), np.full_like(t, 0.3)])
        sig = select_axis(_recording(xyz), "fixed-z")
        assert np.array_equal(sig.values, xyz[:, 2])

    def test_max_variance_finds_injected_breathing_axis(self):
        profile = synth.SynthProfile(duration_s=120.0, rate_profile=((0.0, 6.0),),
                                     breath_axis="y", seed=5)
        rec, _ = synth.generate(profile)
        sig = select_axis(rec, "max-variance")
        assert np.array_equal(sig.values, rec.xyz[:, 1])

    def test_unknown_policy_rejected(self):
        with pytest.raises(ValueError):
            select_axis(_recording(np.zeros((10, 3))), "bogus")


class TestResample:
    def test_constant_stays_constant(self):
        sig = Signal1D(100.0, np.full(1000, 3.25))
        out = resample_uniform(sig, 10.0)
        assert out.sample_rate_hz == 10.0
        assert np.allclose(out.values, 3.25, atol=0)

    def test_ramp_is_exact(self):
        sig = Signal1D(100.0, np.linspace(0.0, 1.0, 101))
        out = resample_uniform(sig, 10.0)
        assert out.values == pytest.approx(np.linspace(0.0, 1.0, 11), abs=1e-9)

    def test_slow_sinusoid_error_below_1e3(self):
        t = np.arange(6000) / 100.0
        sig = Signal1D(100.0, np.sin(2 * np.pi * 0.1 * t))
        out = resample_uniform(sig, 10.0)
        expected = np.sin(2 * np.pi * 0.1 * out.times)
        assert np.max(np.abs(out.values - expected)) < 1e-3

    def test_bad_target_rejected(self):
        with pytest.raises(ValueError):
            resample_uniform(Signal1D(100.0, np.zeros(10)), 0.0)


class TestButterworth:
    def test_unity_dc_gain(self):
        sig = Signal1D(100.0, np.full(2000, 0.75))
        out = butterworth_lowpass(sig, 10.0, 4)
        assert np.max(np.abs(out.values - 0.75)) < 1e-6

    def test_stopband_rejection_40hz(self):
        # squared response applied twice: 1/(1+(40/10)^8) per pass; measured
        # away from the boundaries where the two-pass filter has transients
        t = np.arange(6000) / 100.0
        sig = Signal1D(100.0, np.sin(2 * np.pi * 40.0 * t))
        out = butterworth_lowpass(sig, 10.0, 4)
        rms_in = np.sqrt(np.mean(sig.values[200:-200] ** 2))
        rms_out = np.sqrt(np.mean(out.values[200:-200] ** 2))
        assert rms_out < 0.01 * rms_in

    def test_passband_amplitude_preserved(self):
        t = np.arange(6000) / 100.0
        sig = Signal1D(100.0, np.sin(2 * np.pi * 0.1 * t))
        out = butterworth_lowpass(sig, 10.0, 4)
        assert abs(np.max(np.abs(out.values)) - 1.0) < 0.005

    def test_zero_phase_keeps_peak_position(self):
        t = np.arange(3000) / 100.0
        sig = Signal1D(100.0, np.sin(2 * np.pi * 0.2 * t))
        out = butterworth_lowpass(sig, 10.0, 4)
        assert abs(int(np.argmax(out.values)) - int(np.argmax(sig.values))) < 1

    def test_cutoff_at_nyquist_rejected(self):
        with pytest.raises(ValueError):
            butterworth_lowpass(Signal1D(100.0, np.zeros(100)), 50.0)


class TestLocalMeanRemoval:
    def test_annihilates_constants(self):
        sig = Signal1D(10.0, np.full(1000, 2.5))
        out = local_mean_removal(sig, 30.0)
        assert np.array_equal(out.values, np.zeros(1000))

    def test_ramp_interior_zero_edges_nonzero(self):
        sig = Signal1D(10.0, np.linspace(0.0, 10.0, 1000))
        out = local_mean_removal(sig, 30.0)
        half = 150
        assert np.max(np.abs(out.values[half:-half])) < 1e-9
        assert abs(out.values[0]) > 1e-3
        assert abs(out.values[-1]) > 1e-3

    def test_step_response_matches_direct_computation(self):
        # independent oracle: windowed means computed with an explicit loop
        fs, window_s = 10.0, 30.0
        n = 1200
        values = np.zeros(n)
        values[600:] = 1.0  # step at t = 60 s
        sig = Signal1D(fs, values)
        out = local_mean_removal(sig, window_s)
        half = int(round(window_s * fs)) // 2
        expected = np.array([
            v - values[max(0, i - half):min(n, i + half + 1)].mean()
            for i, v in enumerate(values)
        ])
        assert out.values == pytest.approx(expected, abs=1e-12)
        assert np.max(np.abs(out.values)) <= 1.0
        # plateau decays to zero beyond window/2 from the step
        assert np.max(np.abs(out.values[600 + half + 1:-half])) < 1e-12

    def test_window_longer_than_signal_rejected(self):
        with pytest.raises(ValueError):
            local_mean_removal(Signal1D(10.0, np.zeros(100)), 30.0)


class TestMovingAverage:
    def test_constant_preserved(self):
        out = moving_average(Signal1D(10.0, np.full(100, 1.5)), 13)
        assert np.allclose(out.values, 1.5, atol=1e-12)

    def test_impulse_plateau(self):
        values = np.zeros(101)
        values[50] = 1.0
        out = moving_average(Signal1D(10.0, values), 13)
        assert out.values[44:57] == pytest.approx(np.full(13, 1 / 13), abs=1e-12)
        assert out.values[43] == 0.0
        assert out.values[57] == 0.0

    def test_white_noise_variance_reduction(self, rng):
        values = rng.normal(0.0, 1.0, 10000)
        out = moving_average(Signal1D(10.0, values), 13)
        interior = out.values[6:-6]
        ratio = np.var(interior) / np.var(values)
        assert ratio == pytest.approx(1 / 13, rel=0.2)

    def test_even_points_rejected(self):
        with pytest.raises(ValueError):
            moving_average(Signal1D(10.0, np.zeros(100)), 12)
