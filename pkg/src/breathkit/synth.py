"""Deterministic synthetic-session generator used as ground-truth oracle.

Breathing is synthesized by phase integration of a time-varying rate profile
(so ramps have no phase discontinuities), then mixed with white jitter,
Poisson-scheduled motion bursts, slow drift, and gravity, and distributed
across the three axes by a fixed rotation. A flat decoy variant replaces
breathing and drift with constant gravity plus occasional spikes.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .session_io import (
    RateSeries,
    SessionRecording,
    write_rate_series,
    write_session,
)

# Fixed rotation leaking a little of the chest motion onto the other axes,
# as a strapped phone never aligns perfectly with one body axis.
_OFF_AXIS_LEAK = (0.15, 0.08)


@dataclass(frozen=True)
class SynthProfile:
    duration_s: float = 300.0
    # (t seconds, bpm) control points; a single point means a constant rate.
    rate_profile: tuple = ((0.0, 6.0),)
    rate_interp: str = "step"  # "step" holds each point; "ramp" interpolates
    breath_amplitude_g: float = 0.02
    jitter_rms_g: float = 0.005
    burst_rate_per_min: float = 0.0
    burst_amplitude_g: float = 0.0
    burst_duration_s: float = 1.0
    # "poisson" draws burst times independently; "regular" spaces them evenly
    # (uniform per-window contamination, useful for gate calibration).
    burst_schedule: str = "poisson"
    drift_amplitude_g: float = 0.03
    drift_period_s: float = 150.0
    flat_decoy: bool = False
    seed: int = 0
    sample_rate_hz: float = 100.0
    breath_axis: str = "z"
    session_id: str = ""

    def __post_init__(self) -> None:
        if self.duration_s < 60.0:
            raise ValueError("duration_s must be >= 60")
        for name in ("breath_amplitude_g", "jitter_rms_g", "burst_amplitude_g",
                     "drift_amplitude_g"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.burst_duration_s <= 0 or self.drift_period_s <= 0:
            raise ValueError("durations and periods must be > 0")
        if self.rate_interp not in ("step", "ramp"):
            raise ValueError("rate_interp must be 'step' or 'ramp'")
        if self.burst_schedule not in ("poisson", "regular"):
            raise ValueError("burst_schedule must be 'poisson' or 'regular'")
        if self.breath_axis not in ("x", "y", "z"):
            raise ValueError("breath_axis must be one of x, y, z")
        if not self.rate_profile:
            raise ValueError("rate_profile needs at least one control point")
        for _, bpm in self.rate_profile:
            if not 3.0 <= bpm <= 35.0:
                raise ValueError(f"rate {bpm} bpm outside [3, 35]")

    def rate_at(self, t: np.ndarray) -> np.ndarray:
        pts = sorted(self.rate_profile)
        ts = np.array([p[0] for p in pts])
        rs = np.array([p[1] for p in pts])
        t = np.asarray(t, dtype=np.float64)
        if self.rate_interp == "ramp":
            return np.interp(t, ts, rs)
        idx = np.clip(np.searchsorted(ts, t, side="right") - 1, 0, len(ts) - 1)
        return rs[idx]

    def as_json_dict(self) -> dict:
        d = asdict(self)
        d["rate_profile"] = [list(p) for p in self.rate_profile]
        return d

    @classmethod
    def from_json_dict(cls, d: dict) -> "SynthProfile":
        d = dict(d)
        d["rate_profile"] = tuple(tuple(p) for p in d["rate_profile"])
        return cls(**d)


def _axis_direction(axis: str) -> np.ndarray:
    order = {"x": (0, 1, 2), "y": (1, 2, 0), "z": (2, 0, 1)}[axis]
    d = np.zeros(3)
    d[order[0]] = 1.0
    d[order[1]] = _OFF_AXIS_LEAK[0]
    d[order[2]] = _OFF_AXIS_LEAK[1]
    return d / np.linalg.norm(d)


_BURST_FLIP_S = 2.0  # half-period of the jerk oscillation inside long bursts


def _burst_shape(width: int, fs: float) -> np.ndarray:
    """Square-ish motion transient with tapered edges.

    Bursts longer than one flip interval alternate sign every couple of
    seconds (jerky shaking); short bursts are a single offset pulse. The
    alternation keeps long artifacts near zero mean, the kind of motion the
    local-mean-removal stage cannot absorb as a baseline shift.
    """
    shape = np.ones(width)
    flip = int(round(_BURST_FLIP_S * fs))
    if flip > 0 and width > flip:
        for k, start in enumerate(range(0, width, flip)):
            shape[start:start + flip] = 1.0 if k % 2 == 0 else -1.0
    taper = max(int(round(0.1 * width)), 1)
    ramp = 0.5 - 0.5 * np.cos(np.pi * np.arange(taper) / taper)
    shape[:taper] *= ramp
    shape[-taper:] *= ramp[::-1]
    return shape


def _burst_train(rng, n: int, fs: float, rate_per_min: float, amplitude: float,
                 duration_s: float, schedule: str = "poisson") -> np.ndarray:
    out = np.zeros(n)
    if rate_per_min <= 0 or amplitude <= 0:
        return out
    total_min = n / fs / 60.0
    width = max(int(round(duration_s * fs)), 1)
    shape = _burst_shape(width, fs)
    if schedule == "regular":
        gap = 60.0 / rate_per_min * fs
        starts = [int(round(k * gap)) for k in range(int(np.ceil(n / gap)))]
        starts = [s for s in starts if s + width <= n]
    else:
        count = rng.poisson(rate_per_min * total_min)
        starts = [int(rng.integers(0, max(n - width, 1))) for _ in range(count)]
    for start in starts:
        sign = 1.0 if rng.random() < 0.5 else -1.0
        out[start:start + width] += sign * amplitude * shape
    return out


def generate(p: SynthProfile) -> tuple[SessionRecording, RateSeries]:
    """Generate one session and its exact ground-truth rate series.

    Deterministic for a given profile (the seed drives every random draw).
    The ground truth samples the requested rate profile on a 1 s grid.
    """
    rng = np.random.default_rng(p.seed)
    fs = p.sample_rate_hz
    n = int(round(p.duration_s * fs))
    t = np.arange(n) / fs

    drift_phase = rng.uniform(0.0, 2.0 * np.pi)
    jitter = rng.normal(0.0, p.jitter_rms_g, size=(n, 3)) if p.jitter_rms_g > 0 else 0.0

    direction = _axis_direction(p.breath_axis)
    gravity = direction  # phone strapped with its sensitive axis along gravity

    if p.flat_decoy:
        # Steady, flat trace: gravity plus sparse spikes, no breathing or drift.
        spikes = _burst_train(rng, n, fs, max(p.burst_rate_per_min, 2.0),
                              max(p.burst_amplitude_g, 0.15), 0.3)
        chest = spikes
    else:
        rate = p.rate_at(t)
        phase = np.concatenate(([0.0], np.cumsum((rate[1:] + rate[:-1]) / 2.0))) / fs / 60.0
        # Sessions start at end-exhale (a trough), so the first inhalation
        # peak is fully formed rather than cut by the recording boundary.
        breathing = -p.breath_amplitude_g * np.cos(2.0 * np.pi * phase)
        drift = p.drift_amplitude_g * np.sin(2.0 * np.pi * t / p.drift_period_s + drift_phase)
        bursts = _burst_train(rng, n, fs, p.burst_rate_per_min, p.burst_amplitude_g,
                              p.burst_duration_s, p.burst_schedule)
        chest = breathing + drift + bursts

    xyz = gravity[None, :] + chest[:, None] * direction[None, :] + jitter

    session_id = p.session_id or f"synth-{p.seed}"
    rec = SessionRecording(session_id=session_id, sample_rate_hz=fs, t=t, xyz=xyz)

    gt_t = np.arange(int(np.floor(p.duration_s)), dtype=np.float64)
    gt = RateSeries(gt_t, p.rate_at(gt_t))
    return rec, gt


def generate_corpus(profiles, out_dir) -> dict:
    """Write session and ground-truth CSVs plus a manifest for each profile.

    The manifest records every profile and seed, so the corpus can be
    regenerated byte-identically.
    """
    out_dir = str(out_dir)
    sessions_dir = os.path.join(out_dir, "sessions")
    gt_dir = os.path.join(out_dir, "gt")
    os.makedirs(sessions_dir, exist_ok=True)
    os.makedirs(gt_dir, exist_ok=True)
    entries = []
    for p in profiles:
        rec, gt = generate(p)
        session_csv = os.path.join("sessions", f"{rec.session_id}.csv")
        gt_csv = os.path.join("gt", f"{rec.session_id}.csv")
        write_session(rec, os.path.join(out_dir, session_csv))
        write_rate_series(gt, os.path.join(out_dir, gt_csv))
        entries.append(
            {
                "session_id": rec.session_id,
                "seed": p.seed,
                "session_csv": session_csv,
                "gt_csv": gt_csv,
                "profile": p.as_json_dict(),
            }
        )
    manifest = {"sessions": entries}
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest


# --- labeled segment datasets for the mindfulness classifier -----------------

SEGMENT_SECONDS = 120.0

# Class parameter ranges at full separation; both classes collapse onto the
# midpoint ranges as separation goes to zero.
_SLOW_RANGE = (5.0, 8.0)
_FAST_RANGE = (12.0, 20.0)
_SLOW_WOBBLE = 0.3
_FAST_WOBBLE = 3.0


@dataclass
class LabeledSegments:
    segments: np.ndarray        # (n, 3, samples) raw acceleration in g
    labels: np.ndarray          # (n,) 1 = slow/steady, 0 = fast/erratic
    mean_rate_bpm: np.ndarray   # (n,) mean of each segment's true rate profile
    seeds: np.ndarray = field(repr=False, default=None)
    sample_rate_hz: float = 100.0


def _lerp(a: float, b: float, s: float) -> float:
    return a + s * (b - a)


def _class_profile(label: int, separation: float, seed: int, rng) -> SynthProfile:
    mid_lo = (_SLOW_RANGE[0] + _FAST_RANGE[0]) / 2.0
    mid_hi = (_SLOW_RANGE[1] + _FAST_RANGE[1]) / 2.0
    mid_wobble = (_SLOW_WOBBLE + _FAST_WOBBLE) / 2.0
    if label == 1:
        lo, hi = _lerp(mid_lo, _SLOW_RANGE[0], separation), _lerp(mid_hi, _SLOW_RANGE[1], separation)
        wobble = _lerp(mid_wobble, _SLOW_WOBBLE, separation)
    else:
        lo, hi = _lerp(mid_lo, _FAST_RANGE[0], separation), _lerp(mid_hi, _FAST_RANGE[1], separation)
        wobble = _lerp(mid_wobble, _FAST_WOBBLE, separation)
    base = rng.uniform(lo, hi)
    points = []
    for k, tk in enumerate(np.arange(0.0, SEGMENT_SECONDS, 20.0)):
        r = base if k == 0 else base + rng.uniform(-wobble, wobble)
        points.append((float(tk), float(np.clip(r, 3.0, 35.0))))
    return SynthProfile(
        duration_s=SEGMENT_SECONDS,
        rate_profile=tuple(points),
        rate_interp="ramp",
        seed=seed,
        session_id=f"seg-{seed}",
    )


def make_labeled_segments(n_per_class: int, separation: float, seed: int = 0) -> LabeledSegments:
    """Two-class dataset of raw 2-minute segments.

    Class 1 draws slow, steady rate profiles; class 0 fast, erratic ones.
    ``separation`` in [0, 1] scales the gap between the two parameter
    distributions; at 0 they coincide and no classifier can beat chance.
    """
    if n_per_class < 1:
        raise ValueError("n_per_class must be >= 1")
    if not 0.0 <= separation <= 1.0:
        raise ValueError("separation must lie in [0, 1]")
    master = np.random.default_rng(seed)
    n_total = 2 * n_per_class
    labels = np.array([1] * n_per_class + [0] * n_per_class, dtype=np.int64)
    seg_seeds = master.integers(0, 2**31 - 1, size=n_total)
    segments = None
    mean_rates = np.empty(n_total)
    for i in range(n_total):
        prof_rng = np.random.default_rng(int(seg_seeds[i]) ^ 0x5EED)
        profile = _class_profile(int(labels[i]), separation, int(seg_seeds[i]), prof_rng)
        rec, _ = generate(profile)
        if segments is None:
            segments = np.empty((n_total, 3, rec.n_samples), dtype=np.float32)
        segments[i] = rec.xyz.T.astype(np.float32)
        mean_rates[i] = np.mean([r for _, r in profile.rate_profile])
    return LabeledSegments(segments=segments, labels=labels,
                           mean_rate_bpm=mean_rates, seeds=seg_seeds)


def write_labeled_corpus(ds: LabeledSegments, out_dir) -> dict:
    """Write each segment as a 2-minute session CSV plus a labels manifest."""
    out_dir = str(out_dir)
    seg_dir = os.path.join(out_dir, "segments")
    os.makedirs(seg_dir, exist_ok=True)
    entries = []
    n = ds.segments.shape[0]
    fs = ds.sample_rate_hz
    t = np.arange(ds.segments.shape[2]) / fs
    for i in range(n):
        sid = f"seg-{i:04d}"
        rec = SessionRecording(
            session_id=sid,
            sample_rate_hz=fs,
            t=t,
            xyz=ds.segments[i].T.astype(np.float64),
        )
        rel = os.path.join("segments", f"{sid}.csv")
        write_session(rec, os.path.join(out_dir, rel))
        entries.append({"session_id": sid, "label": int(ds.labels[i]), "csv": rel})
    manifest = {"sample_rate_hz": fs, "segments": entries}
    with open(os.path.join(out_dir, "labels.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    return manifest


# --- standard corpora used by the benchmark and acceptance suites ------------

def sweep_profiles(
    rates=tuple(range(4, 31)),
    duration_s: float = 300.0,
    jitter_rms_g: float = 0.0,
    burst_rate_per_min: float = 0.0,
    burst_amplitude_g: float = 0.0,
    seed_base: int = 1000,
) -> list[SynthProfile]:
    """One constant-rate profile per requested bpm."""
    return [
        SynthProfile(
            duration_s=duration_s,
            rate_profile=((0.0, float(r)),),
            jitter_rms_g=jitter_rms_g,
            burst_rate_per_min=burst_rate_per_min,
            burst_amplitude_g=burst_amplitude_g,
            seed=seed_base + r,
            session_id=f"sweep-{r:02d}bpm",
        )
        for r in rates
    ]


def noisy_sweep_profiles(rates=tuple(range(4, 31)), duration_s: float = 300.0,
                         seed_base: int = 2000) -> list[SynthProfile]:
    """Jitter at 25% of breath amplitude plus 2 bursts/min at 10x amplitude.

    Drift is raised to 0.05 g so motion bursts cannot accidentally cancel the
    postural variation the flat-surface gate keys on.
    """
    amp = 0.02
    return [
        SynthProfile(
            duration_s=duration_s,
            rate_profile=((0.0, float(r)),),
            breath_amplitude_g=amp,
            jitter_rms_g=0.25 * amp,
            burst_rate_per_min=2.0,
            burst_amplitude_g=10.0 * amp,
            drift_amplitude_g=0.05,
            seed=seed_base + r,
            session_id=f"noisy-{r:02d}bpm",
        )
        for r in rates
    ]


def decoy_profiles(n: int = 10, seed_base: int = 3000) -> list[SynthProfile]:
    return [
        SynthProfile(
            duration_s=300.0,
            flat_decoy=True,
            jitter_rms_g=0.002,
            seed=seed_base + i,
            session_id=f"decoy-{i:02d}",
        )
        for i in range(n)
    ]


def genuine_profiles(n: int = 20, seed_base: int = 4000) -> list[SynthProfile]:
    """On-chest sessions across the rate range with realistic drift and noise."""
    out = []
    for i in range(n):
        rate = 4.0 + (26.0 * i) / max(n - 1, 1)
        out.append(
            SynthProfile(
                duration_s=300.0,
                rate_profile=((0.0, round(rate, 2)),),
                jitter_rms_g=0.005,
                burst_rate_per_min=1.0,
                burst_amplitude_g=0.1,
                drift_amplitude_g=0.05,
                seed=seed_base + i,
                session_id=f"genuine-{i:02d}",
            )
        )
    return out
