"""Analytic-vs-numerical gradient validation for the hand-specified architecture.

Backpropagated gradients are compared against central finite differences of
the loss in double precision. A corrupted backward rule anywhere in the
network shows up as a named failing tensor.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
from torch import nn

from .model import build_model
from .netspec import NetSpec


@dataclass
class GradCheckReport:
    checked: int
    failed: list = field(default_factory=list)  # (tensor name, flat index, rel err)
    pass_fraction: float = 0.0

    @property
    def passed(self) -> bool:
        return self.pass_fraction >= 0.99

    def failing_tensors(self) -> set:
        return {name for name, _, _ in self.failed}


def gradient_check(
    spec: NetSpec | None = None,
    seed: int = 0,
    step: float = 1e-3,
    tolerance: float = 1e-4,
    max_per_tensor: int = 64,
    corrupt_tensor: str | None = None,
) -> GradCheckReport:
    """Compare autograd gradients with central differences on a reduced spec.

    ``corrupt_tensor`` scales that tensor's backward gradient by 1.5 via a
    hook, simulating a broken backward rule; the report must then name it.
    """
    spec = spec or NetSpec.tiny()
    torch.manual_seed(seed)
    model = build_model(spec, seed).double()
    model.eval()  # frozen batch-norm statistics: the checked path is inference
    x = torch.randn(2, spec.input_channels, spec.segment_len, dtype=torch.float64)
    y = torch.tensor([1.0, 0.0], dtype=torch.float64)
    criterion = nn.BCEWithLogitsLoss()

    params = dict(model.named_bundle_parameters())
    hook_handle = None
    if corrupt_tensor is not None:
        hook_handle = params[corrupt_tensor].register_hook(lambda g: g * 1.5)

    model.zero_grad()
    loss = criterion(model(x), y)
    loss.backward()
    analytic = {name: p.grad.detach().clone() for name, p in params.items()}
    if hook_handle is not None:
        hook_handle.remove()

    rng = np.random.default_rng(seed)
    checked = 0
    failed = []
    with torch.no_grad():
        for name, p in params.items():
            flat = p.view(-1)
            n = flat.numel()
            idx = np.arange(n) if n <= max_per_tensor else np.sort(
                rng.choice(n, size=max_per_tensor, replace=False))
            for i in idx:
                orig = float(flat[i])
                flat[i] = orig + step
                up = float(criterion(model(x), y))
                flat[i] = orig - step
                down = float(criterion(model(x), y))
                flat[i] = orig
                numeric = (up - down) / (2.0 * step)
                a = float(analytic[name].view(-1)[i])
                denom = max(abs(a), abs(numeric), 1e-8)
                rel = abs(a - numeric) / denom
                checked += 1
                if rel > tolerance:
                    failed.append((name, int(i), rel))
    return GradCheckReport(checked=checked, failed=failed,
                           pass_fraction=1.0 - len(failed) / max(checked, 1))
