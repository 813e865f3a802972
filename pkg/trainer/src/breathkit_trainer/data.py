"""Labeled segment corpora: loading the CSV corpus, standardization, rebalancing.

Corpora come from the breathkit CLI (``breathkit synth --labeled ...``), which
writes one 2-minute session CSV per segment plus a ``labels.json`` manifest.
Standardization matches the inference engine: per-channel zero mean and unit
variance with a 1e-8 variance floor.
"""

from __future__ import annotations

import json
import os
import subprocess
from dataclasses import dataclass

import numpy as np

VARIANCE_FLOOR = 1e-8


@dataclass
class SegmentDataset:
    segments: np.ndarray  # (n, 3, samples) float32, standardized
    labels: np.ndarray    # (n,) int64

    def __len__(self) -> int:
        return self.segments.shape[0]

    def class_counts(self) -> tuple[int, int]:
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))


def standardize(segment: np.ndarray) -> np.ndarray:
    seg = np.asarray(segment, dtype=np.float64)
    mean = seg.mean(axis=1, keepdims=True)
    var = seg.var(axis=1, keepdims=True)
    return (seg - mean) / np.sqrt(var + VARIANCE_FLOOR)


def generate_corpus(out_dir, n_per_class: int, separation: float, seed: int,
                    breathkit_cmd: str = "breathkit") -> str:
    """Invoke the primary CLI to produce a labeled corpus; returns out_dir."""
    subprocess.run(
        [breathkit_cmd, "synth", "--labeled", str(n_per_class),
         "--separation", str(separation), "--seed", str(seed),
         "--out", str(out_dir)],
        check=True,
    )
    return str(out_dir)


def _read_session_csv(path) -> np.ndarray:
    data = np.loadtxt(path, delimiter=",", skiprows=1, dtype=np.float64)
    return data[:, 1:4].T  # (3, samples)


def _manifest_entries(corpus_dir) -> list:
    with open(os.path.join(str(corpus_dir), "labels.json"), encoding="utf-8") as fh:
        manifest = json.load(fh)
    entries = manifest["segments"]
    if not entries:
        raise ValueError(f"{corpus_dir}: empty corpus")
    return entries


def load_corpus(corpus_dir) -> SegmentDataset:
    entries = _manifest_entries(corpus_dir)
    segments = None
    labels = np.empty(len(entries), dtype=np.int64)
    for i, entry in enumerate(entries):
        xyz = _read_session_csv(os.path.join(str(corpus_dir), entry["csv"]))
        if segments is None:
            segments = np.empty((len(entries), 3, xyz.shape[1]), dtype=np.float32)
        segments[i] = standardize(xyz).astype(np.float32)
        labels[i] = int(entry["label"])
    return SegmentDataset(segments=segments, labels=labels)


def load_raw_segments(corpus_dir, indices) -> np.ndarray:
    """Selected segments as recorded (unstandardized), for fixture export."""
    entries = _manifest_entries(corpus_dir)
    out = []
    for i in indices:
        out.append(_read_session_csv(os.path.join(str(corpus_dir), entries[int(i)]["csv"])))
    return np.asarray(out, dtype=np.float32)


def rebalance(ds: SegmentDataset, seed: int) -> SegmentDataset:
    """Resample the minority class with replacement until counts match.

    Sample contents are never altered, only multiplicity; deterministic for a
    given seed.
    """
    n0, n1 = ds.class_counts()
    if n0 == 0 or n1 == 0:
        raise ValueError("both classes must be non-empty")
    if n0 == n1:
        return ds
    rng = np.random.default_rng(seed)
    minority = 0 if n0 < n1 else 1
    deficit = abs(n1 - n0)
    pool = np.flatnonzero(ds.labels == minority)
    extra = rng.choice(pool, size=deficit, replace=True)
    idx = np.concatenate([np.arange(len(ds)), extra])
    return SegmentDataset(segments=ds.segments[idx], labels=ds.labels[idx])


def split_indices(labels: np.ndarray, val_fraction: float, seed: int):
    """Deterministic stratified train/validation index split."""
    rng = np.random.default_rng(seed)
    train_idx, val_idx = [], []
    for label in (0, 1):
        pool = np.flatnonzero(labels == label)
        pool = pool[rng.permutation(pool.size)]
        n_val = max(1, int(round(val_fraction * pool.size)))
        val_idx.append(pool[:n_val])
        train_idx.append(pool[n_val:])
    return np.sort(np.concatenate(train_idx)), np.sort(np.concatenate(val_idx))


def stratified_split(ds: SegmentDataset, val_fraction: float, seed: int):
    """Stratified train/validation split (validation held out before any
    resampling so duplicates cannot leak across the boundary)."""
    train, val = split_indices(ds.labels, val_fraction, seed)
    return (SegmentDataset(ds.segments[train], ds.labels[train]),
            SegmentDataset(ds.segments[val], ds.labels[val]))
