"""File formats for session recordings, ground-truth rate series, and feedback documents.

Formats (all UTF-8, LF line endings):
  session CSV       header ``t,x,y,z``; one sample per line; t in seconds, x/y/z in g
  ground-truth CSV  header ``t,rate_bpm``
  feedback JSON     per-session verdict, rate series, and zone statistics

Floats are serialized with ``repr`` so a write/read round trip is bit-exact.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

SESSION_HEADER = "t,x,y,z"
RATE_HEADER = "t,rate_bpm"

# User-facing messages keyed by verdict string (see reliability.Verdict).
VERDICT_MESSAGES = {
    "ok": "ok",
    "signal_compromised": "signal compromised",
    "not_on_chest": "phone is not on chest",
}


class SessionParseError(ValueError):
    """Malformed file content; message carries path and line number."""


class SessionValidationError(ValueError):
    """Structurally valid file whose content violates a recording invariant."""


@dataclass
class SessionRecording:
    """A timestamped 3-axis acceleration stream.

    ``t`` holds seconds from session start (strictly increasing) and ``xyz``
    is an (n, 3) array in g. ``sample_rate_hz`` is the nominal rate; when the
    observed median gap deviates from it by more than 20% the recording is
    flagged ``irregular`` (a warning, not an error).
    """

    session_id: str
    sample_rate_hz: float
    t: np.ndarray
    xyz: np.ndarray
    meta: dict[str, str] = field(default_factory=dict)
    irregular: bool = field(init=False, default=False)

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=np.float64)
        self.xyz = np.asarray(self.xyz, dtype=np.float64)
        if self.t.ndim != 1 or self.xyz.shape != (self.t.size, 3):
            raise SessionValidationError(
                f"{self.session_id}: expected t (n,) and xyz (n, 3), "
                f"got {self.t.shape} and {self.xyz.shape}"
            )
        if self.t.size == 0:
            raise SessionValidationError(f"{self.session_id}: empty recording")
        if self.sample_rate_hz <= 0:
            raise SessionValidationError(f"{self.session_id}: sample_rate_hz must be > 0")
        if not np.all(np.isfinite(self.t)) or not np.all(np.isfinite(self.xyz)):
            raise SessionValidationError(f"{self.session_id}: non-finite sample values")
        if self.t[0] < 0:
            raise SessionValidationError(f"{self.session_id}: negative timestamp")
        if self.t.size > 1:
            gaps = np.diff(self.t)
            if np.any(gaps <= 0):
                bad = int(np.argmax(gaps <= 0))
                raise SessionValidationError(
                    f"{self.session_id}: timestamps not strictly increasing "
                    f"at sample {bad + 1} (t={self.t[bad + 1]!r} after t={self.t[bad]!r})"
                )
            median_gap = float(np.median(gaps))
            nominal = 1.0 / self.sample_rate_hz
            if abs(median_gap - nominal) > 0.2 * nominal:
                self.irregular = True

    @property
    def n_samples(self) -> int:
        return self.t.size

    @property
    def duration_s(self) -> float:
        """Covered time including the final sample's period."""
        return float(self.t[-1] - self.t[0]) + 1.0 / self.sample_rate_hz


@dataclass
class RateSeries:
    """Ordered (t seconds, breaths-per-minute) pairs."""

    t: np.ndarray
    bpm: np.ndarray

    def __post_init__(self) -> None:
        self.t = np.asarray(self.t, dtype=np.float64)
        self.bpm = np.asarray(self.bpm, dtype=np.float64)
        if self.t.shape != self.bpm.shape or self.t.ndim != 1:
            raise SessionValidationError("rate series t and bpm must be 1-d and equal length")
        if not (np.all(np.isfinite(self.t)) and np.all(np.isfinite(self.bpm))):
            raise SessionValidationError("rate series contains non-finite values")
        if self.t.size > 1 and np.any(np.diff(self.t) <= 0):
            raise SessionValidationError("rate series timestamps not strictly increasing")

    def __len__(self) -> int:
        return self.t.size


def _parse_float_fields(line: str, n_fields: int, path: str, lineno: int) -> list[float]:
    parts = line.split(",")
    if len(parts) != n_fields:
        raise SessionParseError(
            f"{path}:{lineno}: expected {n_fields} comma-separated fields, got {len(parts)}"
        )
    try:
        return [float(p) for p in parts]
    except ValueError as exc:
        raise SessionParseError(f"{path}:{lineno}: {exc}") from None


def read_session(
    path,
    session_id: str | None = None,
    sample_rate_hz: float | None = None,
) -> SessionRecording:
    """Parse a session CSV.

    The nominal rate is inferred from the median inter-sample gap unless
    ``sample_rate_hz`` is given explicitly (in which case the irregularity
    check compares observed gaps against it).
    """
    path = str(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SessionValidationError(f"{path}: empty file")
    if lines[0].strip() != SESSION_HEADER:
        raise SessionParseError(f"{path}:1: expected header {SESSION_HEADER!r}, got {lines[0]!r}")

    rows = []
    prev_t = None
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = _parse_float_fields(line, 4, path, lineno)
        if prev_t is not None and fields[0] <= prev_t:
            raise SessionParseError(
                f"{path}:{lineno}: timestamp {fields[0]!r} not greater than previous {prev_t!r}"
            )
        prev_t = fields[0]
        rows.append(fields)
    if len(rows) < 2:
        raise SessionValidationError(f"{path}: need at least 2 samples, got {len(rows)}")

    data = np.asarray(rows, dtype=np.float64)
    if sample_rate_hz is None:
        sample_rate_hz = 1.0 / float(np.median(np.diff(data[:, 0])))
    if session_id is None:
        import os

        session_id = os.path.splitext(os.path.basename(path))[0]
    return SessionRecording(
        session_id=session_id,
        sample_rate_hz=sample_rate_hz,
        t=data[:, 0],
        xyz=data[:, 1:4],
    )


def write_session(rec: SessionRecording, path) -> None:
    with open(str(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(SESSION_HEADER + "\n")
        for ti, (x, y, z) in zip(rec.t, rec.xyz):
            fh.write(f"{float(ti)!r},{float(x)!r},{float(y)!r},{float(z)!r}\n")


def read_rate_series(path, enforce_range: bool = True) -> RateSeries:
    """Parse a ground-truth CSV. Rates outside (0, 120) bpm are rejected."""
    path = str(path)
    with open(path, encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise SessionValidationError(f"{path}: empty file")
    if lines[0].strip() != RATE_HEADER:
        raise SessionParseError(f"{path}:1: expected header {RATE_HEADER!r}, got {lines[0]!r}")
    rows = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        t, bpm = _parse_float_fields(line, 2, path, lineno)
        if enforce_range and not (0.0 < bpm < 120.0):
            raise SessionValidationError(f"{path}:{lineno}: rate {bpm!r} outside (0, 120) bpm")
        rows.append((t, bpm))
    if not rows:
        raise SessionValidationError(f"{path}: no rate entries")
    data = np.asarray(rows, dtype=np.float64)
    return RateSeries(t=data[:, 0], bpm=data[:, 1])


def write_rate_series(series: RateSeries, path) -> None:
    with open(str(path), "w", encoding="utf-8", newline="\n") as fh:
        fh.write(RATE_HEADER + "\n")
        for t, bpm in zip(series.t, series.bpm):
            fh.write(f"{float(t)!r},{float(bpm)!r}\n")


def build_feedback(
    session_id: str,
    report,
    estimate=None,
    skills=None,
    params: dict | None = None,
) -> dict:
    """Assemble the feedback JSON document.

    ``report`` is a reliability.ReliabilityReport; ``estimate`` a
    respiration.RespirationEstimate (required for an ok verdict, ignored
    otherwise); ``skills`` an optional mind.SkillPrediction. Gated verdicts
    emit only the verdict and its user-facing message.
    """
    verdict = str(report.verdict.value if hasattr(report.verdict, "value") else report.verdict)
    doc: dict = {
        "session_id": session_id,
        "verdict": verdict,
        "message": VERDICT_MESSAGES[verdict],
    }
    if verdict != "ok":
        if params is not None:
            doc["params"] = params
        return doc
    if estimate is None:
        raise ValueError("ok verdict requires an estimate")
    doc["per_minute_bpm"] = [None if v is None else float(v) for v in estimate.per_minute]
    doc["instantaneous"] = [
        {"t": float(t), "bpm": float(b)}
        for t, b in zip(estimate.instantaneous.t, estimate.instantaneous.bpm)
    ]
    doc["zone_seconds_4_9"] = float(estimate.zone_seconds_4_9)
    doc["mean_bpm"] = None if estimate.mean_bpm is None else float(estimate.mean_bpm)
    doc["min_bpm"] = None if estimate.min_bpm is None else float(estimate.min_bpm)
    doc["max_bpm"] = None if estimate.max_bpm is None else float(estimate.max_bpm)
    if skills is not None:
        doc["skills"] = {name: res.session_label for name, res in skills.skills.items()}
    if params is not None:
        doc["params"] = params
    return doc


def write_feedback(
    path,
    session_id: str,
    report,
    estimate=None,
    skills=None,
    params: dict | None = None,
) -> dict:
    doc = build_feedback(session_id, report, estimate=estimate, skills=skills, params=params)
    with open(str(path), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    return doc


def read_feedback(path) -> dict:
    with open(str(path), encoding="utf-8") as fh:
        return json.load(fh)


def feedback_rate_series(doc: dict) -> RateSeries:
    """Extract the instantaneous rate series from a feedback document."""
    entries = doc.get("instantaneous")
    if not entries:
        raise SessionValidationError(
            f"feedback for {doc.get('session_id')!r} carries no instantaneous series"
        )
    return RateSeries(
        t=np.array([e["t"] for e in entries], dtype=np.float64),
        bpm=np.array([e["bpm"] for e in entries], dtype=np.float64),
    )
