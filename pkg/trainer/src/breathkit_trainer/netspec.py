"""Architecture description shared with the inference engine via the .bkw header.

This module implements the documented spec schema independently; the bundle
file format is the interchange contract between trainer and inference.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

GRU_GATES = ("reset", "update", "candidate")
BN_FIELDS = ("gamma", "beta", "running_mean", "running_var")


@dataclass(frozen=True)
class StemSpec:
    kernel: int = 7
    stride: int = 2
    channels: int = 32


@dataclass(frozen=True)
class BlockSpec:
    kind: str
    channels: int
    kernel: int = 3
    stride: int = 1


@dataclass(frozen=True)
class NetSpec:
    input_channels: int = 3
    segment_len: int = 12000
    stem: StemSpec = StemSpec()
    blocks: tuple[BlockSpec, ...] = ()
    gru_hidden: int = 128
    gru_time_bins: int = 25
    bn_eps: float = 1e-5
    activation: str = "hardswish"

    @classmethod
    def full(cls) -> "NetSpec":
        blocks = []
        for stage, ch in enumerate((32, 64, 128, 256)):
            if stage == 0:
                blocks += [BlockSpec("identity", ch), BlockSpec("identity", ch)]
            else:
                blocks += [BlockSpec("conv_shortcut", ch, stride=2), BlockSpec("identity", ch)]
        return cls(blocks=tuple(blocks))

    @classmethod
    def scaled(cls, stem_channels: int = 8, stage_channels=(8, 16, 32, 64),
               gru_hidden: int = 32, segment_len: int = 12000,
               input_channels: int = 3) -> "NetSpec":
        blocks = []
        for stage, ch in enumerate(stage_channels):
            if stage == 0 and ch == stem_channels:
                blocks += [BlockSpec("identity", ch), BlockSpec("identity", ch)]
            else:
                blocks += [BlockSpec("conv_shortcut", ch, stride=2 if stage else 1),
                           BlockSpec("identity", ch)]
        return cls(input_channels=input_channels, segment_len=segment_len,
                   stem=StemSpec(channels=stem_channels), blocks=tuple(blocks),
                   gru_hidden=gru_hidden)

    @classmethod
    def tiny(cls, segment_len: int = 400) -> "NetSpec":
        """One block, 8 channels, 16 hidden units: the gradient-check spec."""
        return cls(segment_len=segment_len, stem=StemSpec(channels=8),
                   blocks=(BlockSpec("identity", 8),), gru_hidden=16)

    def to_json_dict(self) -> dict:
        return {
            "input_channels": self.input_channels,
            "segment_len": self.segment_len,
            "stem": {"kernel": self.stem.kernel, "stride": self.stem.stride,
                     "channels": self.stem.channels},
            "blocks": [
                {"kind": b.kind, "channels": b.channels, "kernel": b.kernel,
                 "stride": b.stride}
                for b in self.blocks
            ],
            "gru_hidden": self.gru_hidden,
            "gru_time_bins": self.gru_time_bins,
            "bn_eps": self.bn_eps,
            "activation": self.activation,
        }

    @classmethod
    def from_json_dict(cls, d: dict) -> "NetSpec":
        return cls(
            input_channels=int(d["input_channels"]),
            segment_len=int(d["segment_len"]),
            stem=StemSpec(**{k: int(v) for k, v in d["stem"].items()}),
            blocks=tuple(BlockSpec(kind=b["kind"], channels=int(b["channels"]),
                                   kernel=int(b["kernel"]), stride=int(b["stride"]))
                         for b in d["blocks"]),
            gru_hidden=int(d["gru_hidden"]),
            gru_time_bins=int(d["gru_time_bins"]),
            bn_eps=float(d["bn_eps"]),
            activation=d["activation"],
        )

    def tensor_specs(self) -> list[tuple[str, tuple[int, ...]]]:
        out: list[tuple[str, tuple[int, ...]]] = []

        def conv(prefix, c_in, c_out, k):
            out.append((f"{prefix}.weight", (c_out, c_in, k)))
            out.append((f"{prefix}.bias", (c_out,)))

        def bn(prefix, c):
            for f in BN_FIELDS:
                out.append((f"{prefix}.{f}", (c,)))

        conv("stem.conv", self.input_channels, self.stem.channels, self.stem.kernel)
        bn("stem.bn", self.stem.channels)
        c_in = self.stem.channels
        for i, b in enumerate(self.blocks):
            conv(f"blocks.{i}.conv1", c_in, b.channels, b.kernel)
            bn(f"blocks.{i}.bn1", b.channels)
            conv(f"blocks.{i}.conv2", b.channels, b.channels, b.kernel)
            bn(f"blocks.{i}.bn2", b.channels)
            if b.kind == "conv_shortcut":
                conv(f"blocks.{i}.shortcut.conv", c_in, b.channels, 1)
                bn(f"blocks.{i}.shortcut.bn", b.channels)
            c_in = b.channels
        h = self.gru_hidden
        feat = self.blocks[-1].channels
        for gate in GRU_GATES:
            out.append((f"gru.{gate}.w_in", (h, feat)))
            out.append((f"gru.{gate}.w_hid", (h, h)))
            out.append((f"gru.{gate}.b_in", (h,)))
            out.append((f"gru.{gate}.b_hid", (h,)))
        out.append(("head.weight", (1, h)))
        out.append(("head.bias", (1,)))
        return out

    def param_count(self) -> int:
        return sum(int(np.prod(s)) for _, s in self.tensor_specs())
