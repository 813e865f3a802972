"""Single-channel preprocessing: axis selection, resampling, denoising filters.

All filters are linear, operate on immutable inputs, and return new signals
on the same time base. Window-based operations truncate (shrink) the window
at the signal edges rather than padding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import signal as sps

from .session_io import SessionRecording

AXIS_NAMES = ("x", "y", "z")


@dataclass
class Signal1D:
    """Uniformly sampled channel; sample i sits at ``t0 + i / sample_rate_hz``."""

    sample_rate_hz: float
    values: np.ndarray
    t0: float = 0.0

    def __post_init__(self) -> None:
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.size < 1:
            raise ValueError("signal must be a non-empty 1-d array")
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be > 0")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("signal contains non-finite values")

    def __len__(self) -> int:
        return self.values.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.values.size) / self.sample_rate_hz

    @property
    def duration_s(self) -> float:
        return self.values.size / self.sample_rate_hz

    def replace_values(self, values: np.ndarray) -> "Signal1D":
        return Signal1D(self.sample_rate_hz, values, self.t0)


def select_axis(rec: SessionRecording, policy: str = "max-variance") -> Signal1D:
    """Pick one acceleration channel.

    ``max-variance`` selects the axis with the largest sample variance over
    the session (breathing shows up on whichever axis the chest moves along);
    ``fixed-z`` always returns z.
    """
    if policy == "fixed-z":
        axis = 2
    elif policy == "max-variance":
        axis = int(np.argmax(np.var(rec.xyz, axis=0)))
    else:
        raise ValueError(f"unknown axis policy {policy!r}")
    return Signal1D(rec.sample_rate_hz, rec.xyz[:, axis].copy(), t0=float(rec.t[0]))


def resample_uniform(sig: Signal1D, target_hz: float) -> Signal1D:
    """Linear interpolation onto a uniform grid spanning [first, last] timestamp."""
    if target_hz <= 0:
        raise ValueError("target_hz must be > 0")
    if len(sig) < 2:
        raise ValueError("need at least 2 samples to resample")
    span = (len(sig) - 1) / sig.sample_rate_hz
    n_out = int(np.floor(span * target_hz)) + 1
    grid = np.arange(n_out) / target_hz
    values = np.interp(grid, np.arange(len(sig)) / sig.sample_rate_hz, sig.values)
    return Signal1D(target_hz, values, t0=sig.t0)


def butterworth_lowpass(sig: Signal1D, cutoff_hz: float = 10.0, order: int = 4) -> Signal1D:
    """Zero-phase Butterworth low-pass (applied forward then backward).

    The two-pass application squares the magnitude response and cancels the
    phase shift, so peak timestamps downstream are not displaced.
    """
    nyquist = sig.sample_rate_hz / 2.0
    if not 0 < cutoff_hz < nyquist:
        raise ValueError(f"cutoff {cutoff_hz} Hz must lie in (0, {nyquist}) Hz")
    sos = sps.butter(order, cutoff_hz, btype="low", fs=sig.sample_rate_hz, output="sos")
    values = sps.sosfiltfilt(sos, sig.values)
    return sig.replace_values(values)


def _truncated_window_means(values: np.ndarray, half: int) -> np.ndarray:
    """Mean over [i-half, i+half] clipped to the array bounds, for every i."""
    n = values.size
    csum = np.concatenate(([0.0], np.cumsum(values)))
    idx = np.arange(n)
    lo = np.clip(idx - half, 0, n)
    hi = np.clip(idx + half + 1, 0, n)
    return (csum[hi] - csum[lo]) / (hi - lo)


def local_mean_removal(sig: Signal1D, window_s: float = 30.0) -> Signal1D:
    """Subtract the mean of a centered window from each sample.

    Removes slow baseline shifts (posture drift, motion-artifact plateaus)
    while leaving oscillations faster than the window intact. The window must
    be longer than the slowest breath period in scope or the breathing
    component itself is removed.
    """
    if window_s <= 0:
        raise ValueError("window_s must be > 0")
    w = int(round(window_s * sig.sample_rate_hz))
    if w >= len(sig):
        raise ValueError(f"window ({window_s} s) must be shorter than the signal")
    half = max(w // 2, 1)
    return sig.replace_values(sig.values - _truncated_window_means(sig.values, half))


def moving_average(sig: Signal1D, points: int = 13) -> Signal1D:
    """Centered boxcar mean over ``points`` samples (odd so the center is defined)."""
    if points < 1 or points % 2 == 0:
        raise ValueError("points must be odd and >= 1")
    return sig.replace_values(_truncated_window_means(sig.values, points // 2))
