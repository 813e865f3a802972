"""Session-level mindfulness-skill inference.

Raw (unfiltered) recordings are cut into non-overlapping 2-minute segments,
standardized per channel, scored by the classifier, and aggregated by
majority vote into one improved / not-improved label per skill.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .network import forward
from .session_io import SessionRecording
from .weights import WeightBundle

SKILLS = ("concentration", "sensory_clarity", "equanimity")
SEGMENT_SECONDS = 120.0
VARIANCE_FLOOR = 1e-8
IMPROVED = "improved"
NOT_IMPROVED = "not_improved"


@dataclass
class SkillResult:
    segment_probs: list[float]
    segment_labels: list[int]
    session_label: str
    votes: tuple[int, int]  # (positive, negative)

    def as_json_dict(self) -> dict:
        return {
            "segment_probs": self.segment_probs,
            "segment_labels": self.segment_labels,
            "session_label": self.session_label,
            "votes": {"positive": self.votes[0], "negative": self.votes[1]},
        }


@dataclass
class SkillPrediction:
    session_id: str
    skills: dict[str, SkillResult]

    def as_json_dict(self) -> dict:
        return {
            "session_id": self.session_id,
            "skills": {name: res.as_json_dict() for name, res in self.skills.items()},
        }


def standardize_segment(segment: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance per channel; a variance floor keeps dead
    channels at zero instead of exploding."""
    seg = np.asarray(segment, dtype=np.float64)
    mean = seg.mean(axis=1, keepdims=True)
    var = seg.var(axis=1, keepdims=True)
    return (seg - mean) / np.sqrt(var + VARIANCE_FLOOR)


def segment(rec: SessionRecording) -> np.ndarray:
    """Cut a recording into standardized (3, samples) segments of 120 s each;
    the trailing remainder is discarded."""
    seg_len = int(round(SEGMENT_SECONDS * rec.sample_rate_hz))
    n_seg = rec.n_samples // seg_len
    if n_seg == 0:
        raise ValueError(
            f"{rec.session_id}: need at least {SEGMENT_SECONDS:.0f} s "
            f"({seg_len} samples) to segment, got {rec.n_samples}"
        )
    out = np.empty((n_seg, 3, seg_len), dtype=np.float64)
    for i in range(n_seg):
        chunk = rec.xyz[i * seg_len:(i + 1) * seg_len].T
        out[i] = standardize_segment(chunk)
    return out


def vote(segment_labels) -> str:
    """Improved only on a strict majority of positive segments; ties are
    conservative (not improved)."""
    labels = list(segment_labels)
    if not labels:
        raise ValueError("cannot vote on an empty label list")
    pos = sum(1 for v in labels if v)
    return IMPROVED if pos > len(labels) - pos else NOT_IMPROVED


def predict_segments(bundle: WeightBundle, segments: np.ndarray) -> SkillResult:
    probs = [forward(bundle.spec, bundle.tensors, seg) for seg in segments]
    labels = [int(p >= 0.5) for p in probs]
    pos = sum(labels)
    return SkillResult(
        segment_probs=probs,
        segment_labels=labels,
        session_label=vote(labels),
        votes=(pos, len(labels) - pos),
    )


def predict_session(rec: SessionRecording, bundles: dict[str, WeightBundle]) -> SkillPrediction:
    """Per-skill segment probabilities, labels, and majority-vote session labels."""
    missing = [s for s in SKILLS if s not in bundles]
    if missing:
        raise ValueError(f"missing weight bundles for skills: {missing}")
    segments = segment(rec)
    results = {name: predict_segments(bundles[name], segments) for name in SKILLS}
    return SkillPrediction(session_id=rec.session_id, skills=results)
