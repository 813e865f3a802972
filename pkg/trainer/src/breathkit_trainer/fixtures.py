"""Reference-fixture export for cross-runtime parity checks.

Writes raw segments plus the probabilities this trainer computes for them
(double precision, float32-quantized weights), so the inference engine can
verify its forward pass against an independent implementation.
"""

from __future__ import annotations

import json
import os

import numpy as np
import torch

from .bkw import read_bundle
from .data import standardize
from .model import build_model
from .netspec import NetSpec


def reference_probabilities(spec: NetSpec, tensors: dict, raw_segments: np.ndarray):
    """Probabilities for raw segments using float32-quantized weights in a
    float64 forward pass (the precision-independent reference)."""
    model = build_model(spec, seed=0).double()
    model.load_tensors(tensors)
    model.eval()
    probs = []
    with torch.no_grad():
        for seg in raw_segments:
            x = torch.as_tensor(standardize(np.asarray(seg, dtype=np.float64)),
                                dtype=torch.float64).unsqueeze(0)
            probs.append(float(torch.sigmoid(model(x))[0]))
    return probs


def export_reference_fixtures(bundle_path, raw_segments: np.ndarray, out_dir,
                              bundle_name: str | None = None) -> dict:
    """Write segments.npz + reference.json next to a copy of the bundle."""
    os.makedirs(str(out_dir), exist_ok=True)
    spec, tensors = read_bundle(bundle_path)
    probs = reference_probabilities(spec, tensors, raw_segments)
    assert all(0.0 < p < 1.0 for p in probs)
    np.savez_compressed(os.path.join(str(out_dir), "segments.npz"),
                        segments=np.asarray(raw_segments, dtype=np.float32))
    if bundle_name is None:
        bundle_name = os.path.basename(str(bundle_path))
    reference = {"bundle": bundle_name, "probs": probs}
    with open(os.path.join(str(out_dir), "reference.json"), "w", encoding="utf-8") as fh:
        json.dump(reference, fh, indent=2)
        fh.write("\n")
    return reference
