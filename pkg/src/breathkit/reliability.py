"""Signal-quality gate: per-window IQR outlier flagging and flat-surface detection.

A session is discarded (not partially salvaged) when too many samples fall
outside the per-window quartile fences, or when its 30 s segment means show
too little variation to have come from a chest.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .signal_core import Signal1D


class Verdict(str, enum.Enum):
    OK = "ok"
    SIGNAL_COMPROMISED = "signal_compromised"
    NOT_ON_CHEST = "not_on_chest"


@dataclass(frozen=True)
class QualityParams:
    iqr_window_s: float = 20.0
    iqr_multiplier: float = 0.8
    compromise_threshold: float = 0.25
    flat_segment_s: float = 30.0
    flat_diff_threshold: float = 0.02  # g
    flat_variation_fraction: float = 0.30

    def __post_init__(self) -> None:
        for name in ("iqr_window_s", "iqr_multiplier", "flat_segment_s", "flat_diff_threshold"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        for name in ("compromise_threshold", "flat_variation_fraction"):
            if not 0 < getattr(self, name) < 1:
                raise ValueError(f"{name} must lie in (0, 1)")


@dataclass
class ReliabilityReport:
    compromised_fraction: float
    flat_fraction: float
    verdict: Verdict
    params_used: QualityParams

    def as_json_dict(self) -> dict:
        return {
            "compromised_fraction": self.compromised_fraction,
            "flat_fraction": self.flat_fraction,
            "verdict": self.verdict.value,
        }


def _window_bounds(n: int, w: int) -> list[tuple[int, int]]:
    """Non-overlapping windows of w samples; a tail shorter than w/2 is merged
    into its predecessor, a longer tail stands alone."""
    full = n // w
    bounds = [(k * w, (k + 1) * w) for k in range(full)]
    rem = n - full * w
    if rem:
        if rem >= w / 2 or not bounds:
            bounds.append((full * w, n))
        else:
            bounds[-1] = (bounds[-1][0], n)
    return bounds


def flag_compromised(sig: Signal1D, p: QualityParams | None = None) -> float:
    """Fraction of samples outside [Q1 - m*IQR, Q3 + m*IQR] of their 20 s window.

    Comparisons are strict, so a constant window (IQR 0) flags nothing.
    """
    p = p or QualityParams()
    w = int(round(p.iqr_window_s * sig.sample_rate_hz))
    if len(sig) < w:
        raise ValueError(f"signal shorter than one {p.iqr_window_s} s window")
    flagged = 0
    for lo, hi in _window_bounds(len(sig), w):
        vals = sig.values[lo:hi]
        q1, q3 = np.percentile(vals, [25.0, 75.0])
        iqr = q3 - q1
        upper = q3 + p.iqr_multiplier * iqr
        lower = q1 - p.iqr_multiplier * iqr
        flagged += int(np.count_nonzero((vals > upper) | (vals < lower)))
    return flagged / len(sig)


def detect_flat_surface(raw: Signal1D, p: QualityParams | None = None) -> tuple[bool, float]:
    """Decide whether the device lay on a flat surface rather than a chest.

    Operates on the raw (pre-mean-removal) channel: each 30 s segment mean is
    compared against the whole-signal mean, and the session counts as flat
    when fewer than ``flat_variation_fraction`` of segments deviate by more
    than ``flat_diff_threshold``. Returns ``(is_flat, flat_fraction)`` where
    ``flat_fraction`` is the share of segments *without* such variation.
    """
    p = p or QualityParams()
    w = int(round(p.flat_segment_s * raw.sample_rate_hz))
    if len(raw) < w:
        raise ValueError(f"signal shorter than one {p.flat_segment_s} s segment")
    global_mean = float(np.mean(raw.values))
    bounds = _window_bounds(len(raw), w)
    deviations = np.array(
        [abs(float(np.mean(raw.values[lo:hi])) - global_mean) for lo, hi in bounds]
    )
    variation = np.count_nonzero(deviations > p.flat_diff_threshold)
    variation_fraction = variation / len(bounds)
    is_flat = variation_fraction < p.flat_variation_fraction
    return is_flat, 1.0 - variation_fraction


def assess(raw: Signal1D, cleaned: Signal1D, p: QualityParams | None = None) -> ReliabilityReport:
    """Compose both checks into a verdict; not-on-chest takes precedence."""
    p = p or QualityParams()
    tol = 1.01 * max(1.0 / raw.sample_rate_hz, 1.0 / cleaned.sample_rate_hz)
    if abs(raw.t0 - cleaned.t0) > tol or abs(raw.duration_s - cleaned.duration_s) > tol:
        raise ValueError("raw and cleaned signals must cover the same time span")
    is_flat, flat_fraction = detect_flat_surface(raw, p)
    compromised = flag_compromised(cleaned, p)
    if is_flat:
        verdict = Verdict.NOT_ON_CHEST
    elif compromised > p.compromise_threshold:
        verdict = Verdict.SIGNAL_COMPROMISED
    else:
        verdict = Verdict.OK
    return ReliabilityReport(
        compromised_fraction=compromised,
        flat_fraction=flat_fraction,
        verdict=verdict,
        params_used=p,
    )
