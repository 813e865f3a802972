"""Breath-peak detection and respiration-rate estimation.

Peaks are local maxima gated by a prominence threshold that adapts to the
session (a fraction of the median candidate prominence), then thinned so no
two peaks sit closer than a minimum spacing. Rates come from inter-peak
intervals, are clipped to the plausible band, and are stabilized by a
trailing multi-cycle average before per-minute reduction.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sps

from .reliability import QualityParams, ReliabilityReport, Verdict, assess
from .session_io import RateSeries, SessionRecording
from .signal_core import (
    Signal1D,
    butterworth_lowpass,
    local_mean_removal,
    moving_average,
    resample_uniform,
    select_axis,
)

ZONE_BPM = (4.0, 9.0)  # restful slow-breathing band reported as time-in-zone


@dataclass(frozen=True)
class PeakParams:
    min_spacing_s: float = 2.0
    prominence_fraction: float = 0.5
    averaging_cycles: int = 7
    rate_band_bpm: tuple[float, float] = (4.0, 30.0)
    # Candidates this many times more prominent than the session reference
    # are motion transients, not breaths; counting one splits a breath
    # interval in two. <= 0 disables the rejection.
    artifact_cap_factor: float = 3.0
    # Quadratic sub-sample refinement of peak times; counters the time
    # quantization of the 10 Hz working grid without affecting which peaks
    # are kept (spacing is decided on sample times).
    refine_times: bool = True

    def __post_init__(self) -> None:
        if self.min_spacing_s <= 0:
            raise ValueError("min_spacing_s must be > 0")
        if not 0 < self.prominence_fraction <= 1:
            raise ValueError("prominence_fraction must lie in (0, 1]")
        if self.averaging_cycles < 1:
            raise ValueError("averaging_cycles must be >= 1")
        lo, hi = self.rate_band_bpm
        if not 0 < lo < hi:
            raise ValueError("rate_band_bpm must be an increasing positive pair")


@dataclass
class PeakSet:
    peak_times: np.ndarray
    prominences: np.ndarray

    def __post_init__(self) -> None:
        self.peak_times = np.asarray(self.peak_times, dtype=np.float64)
        self.prominences = np.asarray(self.prominences, dtype=np.float64)

    def __len__(self) -> int:
        return self.peak_times.size


@dataclass
class RespirationEstimate:
    peaks: PeakSet
    instantaneous: RateSeries          # trailing-averaged rates
    per_minute: list                   # one bpm (or None) per full session minute
    zone_seconds_4_9: float
    mean_bpm: float | None
    min_bpm: float | None
    max_bpm: float | None
    raw_rates: RateSeries = field(repr=False, default=None)


def _thin_by_spacing(times: np.ndarray, prominences: np.ndarray, min_spacing_s: float):
    """Greedily keep the higher-prominence member of any pair closer than the
    minimum spacing (ties broken toward the earlier peak)."""
    order = np.lexsort((times, -prominences))
    keep = np.zeros(times.size, dtype=bool)
    kept_times: list[float] = []
    for i in order:
        t = times[i]
        if all(abs(t - kt) >= min_spacing_s for kt in kept_times):
            keep[i] = True
            kept_times.append(t)
    return keep


def _refine_peak_times(values: np.ndarray, idx: np.ndarray, fs: float) -> np.ndarray:
    """Sub-sample peak positions from a parabola through each peak and its
    neighbors. Scale-invariant, so amplitude invariance is preserved."""
    offsets = np.zeros(idx.size)
    interior = (idx > 0) & (idx < values.size - 1)
    i = idx[interior]
    denom = values[i - 1] - 2.0 * values[i] + values[i + 1]
    ok = denom < 0  # proper curvature; flat tops keep the sample position
    delta = np.zeros(i.size)
    delta[ok] = 0.5 * (values[i - 1] - values[i + 1])[ok] / denom[ok]
    offsets[interior] = np.clip(delta, -0.5, 0.5)
    return idx / fs + offsets / fs


def _reference_prominence(prominences: np.ndarray, duration_s: float,
                          min_rate_bpm: float) -> float:
    """Typical breath-peak prominence, estimated as the k-th largest candidate
    prominence with k = the minimum plausible breath count for the session.

    Any in-scope session holds at least duration * min_rate / 60 breaths, so
    the k-th largest prominence lands inside the breath population. Unlike a
    median over all candidates it is immune to crowds of tiny noise-ripple
    maxima, and unlike the maximum it tolerates a handful of large artifact
    spikes. Being an order statistic, it scales linearly with the signal, so
    the derived threshold is exactly amplitude-invariant.
    """
    k = max(1, int(duration_s * min_rate_bpm / 60.0))
    k = min(k, prominences.size)
    return float(np.partition(prominences, -k)[-k])


def detect_peaks(sig: Signal1D, p: PeakParams | None = None) -> PeakSet:
    """Find breath peaks in a cleaned signal.

    Candidates are samples strictly greater than both neighbors; prominence
    is the vertical distance from the peak to its lowest contour line. Peaks
    below ``prominence_fraction`` of the session's reference prominence are
    dropped, then spacing violations are resolved in favor of prominence.
    """
    p = p or PeakParams()
    if sig.duration_s < 15.0:
        raise ValueError("need at least 15 s of signal for peak detection")
    idx, _ = sps.find_peaks(sig.values)
    if idx.size == 0:
        return PeakSet(np.empty(0), np.empty(0))
    prominences = sps.peak_prominences(sig.values, idx)[0]
    reference = _reference_prominence(prominences, sig.duration_s, p.rate_band_bpm[0])
    threshold = p.prominence_fraction * reference
    mask = prominences >= threshold
    if p.artifact_cap_factor > 0:
        mask &= prominences <= p.artifact_cap_factor * reference
    idx, prominences = idx[mask], prominences[mask]

    # One grid sample of slack: a sample-time gap one step short of the
    # spacing limit is still consistent with a true gap at or above it.
    spacing = p.min_spacing_s - 1.0 / sig.sample_rate_hz - 1e-9
    sample_times = idx / sig.sample_rate_hz
    keep = _thin_by_spacing(sample_times, prominences, spacing)
    idx, prominences = idx[keep], prominences[keep]

    if p.refine_times:
        times = _refine_peak_times(sig.values, idx, sig.sample_rate_hz)
    else:
        times = idx / sig.sample_rate_hz
    return PeakSet(sig.t0 + times, prominences)


def instantaneous_rates(peaks: PeakSet, p: PeakParams | None = None) -> RateSeries:
    """60 / inter-peak interval, stamped at the later peak; out-of-band
    intervals are dropped before any averaging can smear them."""
    p = p or PeakParams()
    if len(peaks) < 2:
        return RateSeries(np.empty(0), np.empty(0))
    dt = np.diff(peaks.peak_times)
    rates = 60.0 / dt
    lo, hi = p.rate_band_bpm
    mask = (rates >= lo) & (rates <= hi)
    return RateSeries(peaks.peak_times[1:][mask], rates[mask])


def smooth_rates(raw: RateSeries, cycles: int = 7) -> RateSeries:
    """Trailing mean over the last ``cycles`` entries (shrinking at the start)."""
    if cycles < 1:
        raise ValueError("cycles must be >= 1")
    n = len(raw)
    if n == 0:
        return RateSeries(np.empty(0), np.empty(0))
    csum = np.concatenate(([0.0], np.cumsum(raw.bpm)))
    idx = np.arange(n)
    lo = np.maximum(idx - cycles + 1, 0)
    means = (csum[idx + 1] - csum[lo]) / (idx + 1 - lo)
    return RateSeries(raw.t.copy(), means)


def per_minute(smoothed: RateSeries, duration_s: float) -> list:
    """Mean smoothed rate per full session minute; empty minutes inherit the
    nearest previous minute's value and are None before any rate exists."""
    if duration_s < 60.0:
        raise ValueError("need at least 60 s for a per-minute series")
    minutes = int(duration_s // 60)
    out: list = []
    for m in range(minutes):
        mask = (smoothed.t >= 60.0 * m) & (smoothed.t < 60.0 * (m + 1))
        if np.any(mask):
            out.append(float(np.mean(smoothed.bpm[mask])))
        elif out:
            out.append(out[-1])
        else:
            out.append(None)
    return out


def zone_seconds(smoothed: RateSeries, band: tuple[float, float] = ZONE_BPM) -> float:
    """Total time spent in the band: sum of spans between consecutive entries
    whose (later) smoothed rate lies inside it."""
    if len(smoothed) < 2:
        return 0.0
    spans = np.diff(smoothed.t)
    in_zone = (smoothed.bpm[1:] >= band[0]) & (smoothed.bpm[1:] <= band[1])
    return float(np.sum(spans[in_zone]))


def preprocess_session(
    rec: SessionRecording,
    axis_policy: str = "max-variance",
    working_rate_hz: float = 10.0,
    lowpass_cutoff_hz: float = 10.0,
    lowpass_order: int = 4,
    mean_window_s: float = 30.0,
    ma_points: int = 13,
) -> tuple[Signal1D, Signal1D]:
    """Stages 1-2: returns (raw, cleaned) signals at the working rate.

    ``raw`` is the low-passed, resampled channel before mean removal (the
    input to flat-surface detection); ``cleaned`` additionally has the local
    mean removed and the moving average applied. The anti-jitter low-pass is
    skipped when the recording cannot contain the jitter band.
    """
    sig = select_axis(rec, axis_policy)
    if lowpass_cutoff_hz < sig.sample_rate_hz / 2.0:
        sig = butterworth_lowpass(sig, lowpass_cutoff_hz, lowpass_order)
    raw = resample_uniform(sig, working_rate_hz)
    cleaned = moving_average(local_mean_removal(raw, mean_window_s), ma_points)
    return raw, cleaned


def estimate_session(
    rec: SessionRecording,
    qp: QualityParams | None = None,
    pp: PeakParams | None = None,
    axis_policy: str = "max-variance",
    working_rate_hz: float = 10.0,
    lowpass_cutoff_hz: float = 10.0,
    lowpass_order: int = 4,
    mean_window_s: float = 30.0,
    ma_points: int = 13,
) -> tuple[ReliabilityReport, RespirationEstimate | None]:
    """Run the full pipeline on one recording.

    Stages: axis selection, anti-jitter low-pass, resampling to the working
    rate, local mean removal, moving average, quality gate, then peak-based
    estimation. Gated sessions return a report and no estimate.
    """
    qp = qp or QualityParams()
    pp = pp or PeakParams()
    if rec.duration_s < 60.0:
        raise ValueError("need at least 60 s of data for respiration estimation")

    raw, cleaned = preprocess_session(
        rec,
        axis_policy=axis_policy,
        working_rate_hz=working_rate_hz,
        lowpass_cutoff_hz=lowpass_cutoff_hz,
        lowpass_order=lowpass_order,
        mean_window_s=mean_window_s,
        ma_points=ma_points,
    )
    report = assess(raw, cleaned, qp)
    if report.verdict is not Verdict.OK:
        return report, None

    peaks = detect_peaks(cleaned, pp)
    raw_rates = instantaneous_rates(peaks, pp)
    smoothed = smooth_rates(raw_rates, pp.averaging_cycles)
    minutes = per_minute(smoothed, rec.duration_s)
    bpm = smoothed.bpm
    estimate = RespirationEstimate(
        peaks=peaks,
        instantaneous=smoothed,
        per_minute=minutes,
        zone_seconds_4_9=zone_seconds(smoothed),
        mean_bpm=float(np.mean(bpm)) if bpm.size else None,
        min_bpm=float(np.min(bpm)) if bpm.size else None,
        max_bpm=float(np.max(bpm)) if bpm.size else None,
        raw_rates=raw_rates,
    )
    return report, estimate
