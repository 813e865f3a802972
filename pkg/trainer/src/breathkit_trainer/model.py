"""Torch implementation of the residual/recurrent classifier.

The module tree mirrors the bundle tensor naming one-to-one so export and
re-import are mechanical. The recurrent cell is written out gate by gate
(rather than nn.GRU) so each gate has its own named parameters and its
backward path can be instrumented for gradient checking.
"""

from __future__ import annotations

import numpy as np
import torch
from torch import nn

from .netspec import GRU_GATES, NetSpec


class ResidualBlock(nn.Module):
    def __init__(self, c_in: int, spec_block):
        super().__init__()
        c_out, k, s = spec_block.channels, spec_block.kernel, spec_block.stride
        pad = (k - 1) // 2
        self.conv1 = nn.Conv1d(c_in, c_out, k, stride=s, padding=pad)
        self.bn1 = nn.BatchNorm1d(c_out)
        self.conv2 = nn.Conv1d(c_out, c_out, k, stride=1, padding=pad)
        self.bn2 = nn.BatchNorm1d(c_out)
        self.act = nn.Hardswish()
        if spec_block.kind == "conv_shortcut":
            self.shortcut_conv = nn.Conv1d(c_in, c_out, 1, stride=s)
            self.shortcut_bn = nn.BatchNorm1d(c_out)
        else:
            self.shortcut_conv = None

    def forward(self, x):
        main = self.act(self.bn1(self.conv1(x)))
        main = self.bn2(self.conv2(main))
        if self.shortcut_conv is not None:
            short = self.shortcut_bn(self.shortcut_conv(x))
        else:
            short = x
        return self.act(main + short)


class GateGRU(nn.Module):
    """Single-layer GRU over a feature sequence, parameters grouped per gate."""

    def __init__(self, input_size: int, hidden: int):
        super().__init__()
        self.hidden = hidden
        k = 1.0 / np.sqrt(hidden)
        for gate in GRU_GATES:
            self.register_parameter(f"{gate}_w_in",
                                    nn.Parameter(torch.empty(hidden, input_size).uniform_(-k, k)))
            self.register_parameter(f"{gate}_w_hid",
                                    nn.Parameter(torch.empty(hidden, hidden).uniform_(-k, k)))
            self.register_parameter(f"{gate}_b_in",
                                    nn.Parameter(torch.empty(hidden).uniform_(-k, k)))
            self.register_parameter(f"{gate}_b_hid",
                                    nn.Parameter(torch.empty(hidden).uniform_(-k, k)))

    def _gate(self, name, x_t, h):
        w_in = getattr(self, f"{name}_w_in")
        w_hid = getattr(self, f"{name}_w_hid")
        b_in = getattr(self, f"{name}_b_in")
        b_hid = getattr(self, f"{name}_b_hid")
        return x_t @ w_in.T + b_in, h @ w_hid.T + b_hid

    def forward(self, seq):
        # seq: (batch, time, features); returns final hidden state (batch, hidden)
        batch, steps, _ = seq.shape
        h = seq.new_zeros(batch, self.hidden)
        for t in range(steps):
            x_t = seq[:, t, :]
            ri, rh = self._gate("reset", x_t, h)
            zi, zh = self._gate("update", x_t, h)
            ni, nh = self._gate("candidate", x_t, h)
            r = torch.sigmoid(ri + rh)
            z = torch.sigmoid(zi + zh)
            n = torch.tanh(ni + r * nh)
            h = (1.0 - z) * n + z * h
        return h


def pool_time_bins(x: torch.Tensor, bins: int) -> torch.Tensor:
    """Average (batch, channels, L) onto ``bins`` temporal windows with the
    floor/ceil boundaries the inference engine uses, so pooled sequences are
    identical across runtimes."""
    length = x.shape[2]
    chunks = []
    for i in range(bins):
        lo = (i * length) // bins
        hi = -(-((i + 1) * length) // bins)
        chunks.append(x[:, :, lo:hi].mean(dim=2))
    return torch.stack(chunks, dim=1)  # (batch, bins, channels)


class SkillClassifier(nn.Module):
    def __init__(self, spec: NetSpec):
        super().__init__()
        self.spec = spec
        pad = (spec.stem.kernel - 1) // 2
        self.stem_conv = nn.Conv1d(spec.input_channels, spec.stem.channels,
                                   spec.stem.kernel, stride=spec.stem.stride, padding=pad)
        self.stem_bn = nn.BatchNorm1d(spec.stem.channels)
        self.act = nn.Hardswish()
        blocks = []
        c_in = spec.stem.channels
        for b in spec.blocks:
            blocks.append(ResidualBlock(c_in, b))
            c_in = b.channels
        self.blocks = nn.ModuleList(blocks)
        self.gru = GateGRU(c_in, spec.gru_hidden)
        self.head = nn.Linear(spec.gru_hidden, 1)

    def forward(self, x):
        # x: (batch, channels, time) -> logits (batch,)
        x = self.act(self.stem_bn(self.stem_conv(x)))
        for block in self.blocks:
            x = block(x)
        seq = pool_time_bins(x, self.spec.gru_time_bins)
        h = self.gru(seq)
        return self.head(h).squeeze(-1)

    # --- bundle mapping ------------------------------------------------------

    def _parameter_map(self) -> dict[str, torch.Tensor]:
        out = {
            "stem.conv.weight": self.stem_conv.weight,
            "stem.conv.bias": self.stem_conv.bias,
            "stem.bn.gamma": self.stem_bn.weight,
            "stem.bn.beta": self.stem_bn.bias,
            "stem.bn.running_mean": self.stem_bn.running_mean,
            "stem.bn.running_var": self.stem_bn.running_var,
        }
        for i, block in enumerate(self.blocks):
            p = f"blocks.{i}"
            out[f"{p}.conv1.weight"] = block.conv1.weight
            out[f"{p}.conv1.bias"] = block.conv1.bias
            out[f"{p}.bn1.gamma"] = block.bn1.weight
            out[f"{p}.bn1.beta"] = block.bn1.bias
            out[f"{p}.bn1.running_mean"] = block.bn1.running_mean
            out[f"{p}.bn1.running_var"] = block.bn1.running_var
            out[f"{p}.conv2.weight"] = block.conv2.weight
            out[f"{p}.conv2.bias"] = block.conv2.bias
            out[f"{p}.bn2.gamma"] = block.bn2.weight
            out[f"{p}.bn2.beta"] = block.bn2.bias
            out[f"{p}.bn2.running_mean"] = block.bn2.running_mean
            out[f"{p}.bn2.running_var"] = block.bn2.running_var
            if block.shortcut_conv is not None:
                out[f"{p}.shortcut.conv.weight"] = block.shortcut_conv.weight
                out[f"{p}.shortcut.conv.bias"] = block.shortcut_conv.bias
                out[f"{p}.shortcut.bn.gamma"] = block.shortcut_bn.weight
                out[f"{p}.shortcut.bn.beta"] = block.shortcut_bn.bias
                out[f"{p}.shortcut.bn.running_mean"] = block.shortcut_bn.running_mean
                out[f"{p}.shortcut.bn.running_var"] = block.shortcut_bn.running_var
        for gate in GRU_GATES:
            out[f"gru.{gate}.w_in"] = getattr(self.gru, f"{gate}_w_in")
            out[f"gru.{gate}.w_hid"] = getattr(self.gru, f"{gate}_w_hid")
            out[f"gru.{gate}.b_in"] = getattr(self.gru, f"{gate}_b_in")
            out[f"gru.{gate}.b_hid"] = getattr(self.gru, f"{gate}_b_hid")
        out["head.weight"] = self.head.weight
        out["head.bias"] = self.head.bias
        return out

    def export_tensors(self) -> dict[str, np.ndarray]:
        with torch.no_grad():
            return {name: t.detach().cpu().numpy().astype(np.float32).copy()
                    for name, t in self._parameter_map().items()}

    def load_tensors(self, tensors: dict[str, np.ndarray]) -> None:
        with torch.no_grad():
            for name, t in self._parameter_map().items():
                src = torch.as_tensor(np.asarray(tensors[name]), dtype=t.dtype)
                t.copy_(src)

    def named_bundle_parameters(self):
        """(bundle name, parameter) pairs for trainable parameters only."""
        for name, t in self._parameter_map().items():
            if isinstance(t, nn.Parameter):
                yield name, t


def build_model(spec: NetSpec, seed: int) -> SkillClassifier:
    torch.manual_seed(seed)
    return SkillClassifier(spec)
