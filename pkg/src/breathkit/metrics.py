"""Agreement and classification metrics: MAE, Pearson correlation, Bland-Altman
limits of agreement, and precision/recall/F1.

Differences are estimate minus ground truth throughout. Limits of agreement
use the sample standard deviation (ddof=1), the conventional choice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .session_io import RateSeries

RATE_BANDS_BPM = ((4.0, 9.0), (9.0, 15.0), (15.0, 30.0))


@dataclass
class AlignedPairs:
    t: np.ndarray
    gt: np.ndarray
    est: np.ndarray
    n_dropped: int

    def __len__(self) -> int:
        return self.gt.size


@dataclass
class BlandAltman:
    mean_diff: float
    loa_low: float
    loa_high: float
    sd_diff: float


@dataclass
class AgreementReport:
    mae: float
    pcc: float | None
    pcc_undefined_reason: str | None
    bland_altman: BlandAltman
    n: int
    per_band: dict = field(default_factory=dict)

    def as_json_dict(self) -> dict:
        return {
            "mae": self.mae,
            "pcc": self.pcc,
            "pcc_undefined_reason": self.pcc_undefined_reason,
            "bland_altman": {
                "mean_diff": self.bland_altman.mean_diff,
                "loa_low": self.bland_altman.loa_low,
                "loa_high": self.bland_altman.loa_high,
                "sd_diff": self.bland_altman.sd_diff,
            },
            "n": self.n,
            "per_band": {k: dict(v) for k, v in self.per_band.items()},
        }


@dataclass
class ClassificationReport:
    tp: int
    fp: int
    fn: int
    tn: int
    precision: float | None
    recall: float | None
    f1: float | None

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def as_json_dict(self) -> dict:
        return {
            "tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn,
            "precision": self.precision, "recall": self.recall, "f1": self.f1,
        }


def align(gt: RateSeries, est: RateSeries, tolerance_s: float = 5.0) -> AlignedPairs:
    """Pair each estimate with the nearest-in-time ground-truth entry.

    Estimates with no ground truth within ``tolerance_s`` are dropped (and
    counted); an alignment yielding zero pairs is an error.
    """
    if len(gt) == 0 or len(est) == 0:
        raise ValueError("both series must be non-empty")
    pos = np.searchsorted(gt.t, est.t)
    left = np.clip(pos - 1, 0, len(gt) - 1)
    right = np.clip(pos, 0, len(gt) - 1)
    pick = np.where(np.abs(gt.t[left] - est.t) <= np.abs(gt.t[right] - est.t), left, right)
    dist = np.abs(gt.t[pick] - est.t)
    mask = dist <= tolerance_s
    if not np.any(mask):
        raise ValueError(f"no estimate lies within {tolerance_s} s of any ground-truth entry")
    return AlignedPairs(
        t=est.t[mask],
        gt=gt.bpm[pick[mask]],
        est=est.bpm[mask],
        n_dropped=int(np.count_nonzero(~mask)),
    )


def _band_key(lo: float, hi: float) -> str:
    return f"{lo:g}-{hi:g}"


def agreement(pairs: AlignedPairs) -> AgreementReport:
    """MAE, Pearson correlation, and Bland-Altman statistics over paired rates.

    Band buckets are keyed by the ground-truth value: [4,9], (9,15], (15,30].
    Correlation is reported as absent (with a reason) when either series is
    constant.
    """
    if len(pairs) < 2:
        raise ValueError("need at least 2 pairs")
    gt, est = pairs.gt, pairs.est
    diff = est - gt
    mae = float(np.mean(np.abs(diff)))
    mean_diff = float(np.mean(diff))
    sd = float(np.std(diff, ddof=1))
    ba = BlandAltman(
        mean_diff=mean_diff,
        loa_low=mean_diff - 1.96 * sd,
        loa_high=mean_diff + 1.96 * sd,
        sd_diff=sd,
    )
    pcc: float | None
    reason = None
    if np.ptp(gt) == 0 or np.ptp(est) == 0:
        pcc = None
        reason = "correlation undefined for a constant series"
    else:
        cov = float(np.cov(gt, est, ddof=1)[0, 1])
        pcc = cov / (float(np.std(gt, ddof=1)) * float(np.std(est, ddof=1)))
    per_band = {}
    for i, (lo, hi) in enumerate(RATE_BANDS_BPM):
        mask = (gt >= lo) & (gt <= hi) if i == 0 else (gt > lo) & (gt <= hi)
        n = int(np.count_nonzero(mask))
        per_band[_band_key(lo, hi)] = {
            "mae": float(np.mean(np.abs(diff[mask]))) if n else None,
            "n": n,
        }
    return AgreementReport(
        mae=mae, pcc=pcc, pcc_undefined_reason=reason,
        bland_altman=ba, n=len(pairs), per_band=per_band,
    )


def bland_altman_points(pairs: AlignedPairs) -> np.ndarray:
    """(mean, difference) pairs for external plotting; columns (t, mean, diff)."""
    return np.column_stack([pairs.t, (pairs.gt + pairs.est) / 2.0, pairs.est - pairs.gt])


def classification_metrics(gt_labels, pred_labels) -> ClassificationReport:
    """Binary precision/recall/F1; zero-denominator metrics are absent (None)
    with the counts still reported."""
    gt = np.asarray(gt_labels)
    pred = np.asarray(pred_labels)
    if gt.shape != pred.shape:
        raise ValueError(f"label length mismatch: {gt.shape} vs {pred.shape}")
    if not (np.isin(gt, (0, 1)).all() and np.isin(pred, (0, 1)).all()):
        raise ValueError("labels must be binary (0/1)")
    tp = int(np.count_nonzero((gt == 1) & (pred == 1)))
    fp = int(np.count_nonzero((gt == 0) & (pred == 1)))
    fn = int(np.count_nonzero((gt == 1) & (pred == 0)))
    tn = int(np.count_nonzero((gt == 0) & (pred == 0)))
    precision = tp / (tp + fp) if (tp + fp) else None
    recall = tp / (tp + fn) if (tp + fn) else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return ClassificationReport(tp=tp, fp=fp, fn=fn, tn=tn,
                                precision=precision, recall=recall, f1=f1)
