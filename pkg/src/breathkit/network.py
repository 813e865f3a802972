"""Architecture description and from-scratch forward pass for the skill classifier.

The network is a 1-D residual stack (stem conv, then residual blocks with
batch normalization and hardswish; conv-shortcut blocks wherever channels or
stride change). Average pooling then reduces the temporal axis onto a fixed
coarse grid while keeping the channel features, a gated recurrent layer runs
over that grid, and a dense layer on the final hidden state plus a sigmoid
yields the probability.

Inference is a pure function of (spec, tensors, segment): batch normalization
uses stored running statistics and all arithmetic runs in float64 regardless
of the float32 storage format, so results are bit-stable across runs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

GRU_GATES = ("reset", "update", "candidate")
BN_FIELDS = ("gamma", "beta", "running_mean", "running_var")


class InferenceError(RuntimeError):
    """Forward-pass failure (shape mismatch, missing tensor, non-finite value)."""


@dataclass(frozen=True)
class StemSpec:
    kernel: int = 7
    stride: int = 2
    channels: int = 32


@dataclass(frozen=True)
class BlockSpec:
    kind: str  # "identity" | "conv_shortcut"
    channels: int
    kernel: int = 3
    stride: int = 1


@dataclass(frozen=True)
class NetworkSpec:
    input_channels: int = 3
    segment_len: int = 12000
    stem: StemSpec = StemSpec()
    blocks: tuple[BlockSpec, ...] = ()
    gru_hidden: int = 128
    # the residual stack's temporal axis is average-pooled onto this many
    # bins before the recurrence (dimensionality reduction that still leaves
    # the recurrent layer a time axis to run over)
    gru_time_bins: int = 25
    bn_eps: float = 1e-5
    activation: str = "hardswish"

    def __post_init__(self) -> None:
        if self.input_channels < 1 or self.segment_len < 1 or self.gru_hidden < 1:
            raise ValueError("input_channels, segment_len, gru_hidden must be >= 1")
        if self.gru_time_bins < 1:
            raise ValueError("gru_time_bins must be >= 1")
        if self.activation != "hardswish":
            raise ValueError(f"unsupported activation {self.activation!r}")
        if not self.blocks:
            raise ValueError("need at least one residual block")
        in_ch = self.stem.channels
        for i, b in enumerate(self.blocks):
            if b.kind not in ("identity", "conv_shortcut"):
                raise ValueError(f"block {i}: unknown kind {b.kind!r}")
            if b.kind == "identity" and (b.channels != in_ch or b.stride != 1):
                raise ValueError(
                    f"block {i}: channel or stride change ({in_ch}->{b.channels}, "
                    f"stride {b.stride}) requires a conv shortcut"
                )
            in_ch = b.channels
        if self.out_len() < self.gru_time_bins:
            raise ValueError(
                f"temporal length after the blocks ({self.out_len()}) is shorter "
                f"than gru_time_bins ({self.gru_time_bins})"
            )

    @classmethod
    def default(cls) -> "NetworkSpec":
        """Full-size architecture: stem conv(7, stride 2, 32ch) and eight
        residual blocks in four stages (32/64/128/256), each later stage opened
        by a stride-2 conv-shortcut block; recurrent hidden size 128."""
        blocks = []
        channels = (32, 64, 128, 256)
        for stage, ch in enumerate(channels):
            if stage == 0:
                blocks += [BlockSpec("identity", ch), BlockSpec("identity", ch)]
            else:
                blocks += [BlockSpec("conv_shortcut", ch, stride=2), BlockSpec("identity", ch)]
        return cls(blocks=tuple(blocks))

    @classmethod
    def scaled(cls, stem_channels: int = 8, stage_channels=(8, 16, 32, 64),
               gru_hidden: int = 32, segment_len: int = 12000,
               input_channels: int = 3) -> "NetworkSpec":
        """Same topology at reduced width, for tests and CPU-budget training."""
        blocks = []
        for stage, ch in enumerate(stage_channels):
            if stage == 0 and ch == stem_channels:
                blocks += [BlockSpec("identity", ch), BlockSpec("identity", ch)]
            else:
                blocks += [BlockSpec("conv_shortcut", ch, stride=2 if stage else 1),
                           BlockSpec("identity", ch)]
        return cls(
            input_channels=input_channels,
            segment_len=segment_len,
            stem=StemSpec(channels=stem_channels),
            blocks=tuple(blocks),
            gru_hidden=gru_hidden,
        )

    # --- wire format ---------------------------------------------------------

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
    def from_json_dict(cls, d: dict) -> "NetworkSpec":
        return cls(
            input_channels=int(d["input_channels"]),
            segment_len=int(d["segment_len"]),
            stem=StemSpec(**{k: int(v) for k, v in d["stem"].items()}),
            blocks=tuple(
                BlockSpec(kind=b["kind"], channels=int(b["channels"]),
                          kernel=int(b["kernel"]), stride=int(b["stride"]))
                for b in d["blocks"]
            ),
            gru_hidden=int(d["gru_hidden"]),
            gru_time_bins=int(d["gru_time_bins"]),
            bn_eps=float(d["bn_eps"]),
            activation=d["activation"],
        )

    # --- shape arithmetic ----------------------------------------------------

    def tensor_specs(self) -> list[tuple[str, tuple[int, ...]]]:
        """Canonical (name, shape) list every weight bundle must carry."""
        out: list[tuple[str, tuple[int, ...]]] = []

        def conv(prefix: str, c_in: int, c_out: int, k: int) -> None:
            out.append((f"{prefix}.weight", (c_out, c_in, k)))
            out.append((f"{prefix}.bias", (c_out,)))

        def bn(prefix: str, c: int) -> None:
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
        return sum(int(np.prod(shape)) for _, shape in self.tensor_specs())

    def out_len(self) -> int:
        """Temporal length after the stem and all blocks."""
        n = _conv_out_len(self.segment_len, self.stem.kernel, self.stem.stride)
        for b in self.blocks:
            n = _conv_out_len(n, b.kernel, b.stride)
        return n


def _conv_out_len(n: int, kernel: int, stride: int) -> int:
    pad = (kernel - 1) // 2
    return (n + 2 * pad - kernel) // stride + 1


def hardswish(x: np.ndarray) -> np.ndarray:
    return x * np.clip(x + 3.0, 0.0, 6.0) / 6.0


def _sigmoid(x):
    return 1.0 / (1.0 + np.exp(-x))


def conv1d(x: np.ndarray, weight: np.ndarray, bias: np.ndarray, stride: int) -> np.ndarray:
    """'Same'-padded 1-D convolution; x is (C_in, L), weight (C_out, C_in, K)."""
    c_out, c_in, k = weight.shape
    pad = (k - 1) // 2
    xp = np.pad(x, ((0, 0), (pad, pad)))
    windows = np.lib.stride_tricks.sliding_window_view(xp, k, axis=1)[:, ::stride, :]
    # windows: (C_in, L_out, K) -> (L_out, C_in*K) @ (C_in*K, C_out)
    l_out = windows.shape[1]
    flat = windows.transpose(1, 0, 2).reshape(l_out, c_in * k)
    return (flat @ weight.reshape(c_out, c_in * k).T + bias).T


def batchnorm1d(x: np.ndarray, gamma, beta, mean, var, eps: float) -> np.ndarray:
    scale = gamma / np.sqrt(var + eps)
    return x * scale[:, None] + (beta - mean * scale)[:, None]


def pool_time_bins(x: np.ndarray, bins: int) -> np.ndarray:
    """Average the temporal axis of (C, L) onto ``bins`` windows.

    Bin i covers samples [floor(i*L/bins), ceil((i+1)*L/bins)); the trainer
    uses the identical arithmetic, so pooled sequences match across runtimes.
    """
    length = x.shape[1]
    out = np.empty((x.shape[0], bins))
    for i in range(bins):
        lo = (i * length) // bins
        hi = -(-((i + 1) * length) // bins)  # ceil division
        out[:, i] = x[:, lo:hi].mean(axis=1)
    return out


def _check_finite(x: np.ndarray, layer: str) -> None:
    if not np.all(np.isfinite(x)):
        raise InferenceError(f"non-finite activation after {layer}")


def forward(spec: NetworkSpec, tensors: dict, segment: np.ndarray) -> float:
    """Probability for one standardized segment of shape (input_channels, segment_len)."""
    segment = np.asarray(segment, dtype=np.float64)
    expected = (spec.input_channels, spec.segment_len)
    if segment.shape != expected:
        raise InferenceError(f"segment shape {segment.shape} does not match spec {expected}")

    def get(name: str) -> np.ndarray:
        try:
            return np.asarray(tensors[name], dtype=np.float64)
        except KeyError:
            raise InferenceError(f"missing tensor {name!r}") from None

    def bn(prefix: str, x: np.ndarray) -> np.ndarray:
        return batchnorm1d(x, get(f"{prefix}.gamma"), get(f"{prefix}.beta"),
                           get(f"{prefix}.running_mean"), get(f"{prefix}.running_var"),
                           spec.bn_eps)

    x = conv1d(segment, get("stem.conv.weight"), get("stem.conv.bias"), spec.stem.stride)
    x = hardswish(bn("stem.bn", x))
    _check_finite(x, "stem")

    for i, b in enumerate(spec.blocks):
        p = f"blocks.{i}"
        main = conv1d(x, get(f"{p}.conv1.weight"), get(f"{p}.conv1.bias"), b.stride)
        main = hardswish(bn(f"{p}.bn1", main))
        main = conv1d(main, get(f"{p}.conv2.weight"), get(f"{p}.conv2.bias"), 1)
        main = bn(f"{p}.bn2", main)
        if b.kind == "conv_shortcut":
            short = conv1d(x, get(f"{p}.shortcut.conv.weight"),
                           get(f"{p}.shortcut.conv.bias"), b.stride)
            short = bn(f"{p}.shortcut.bn", short)
        else:
            short = x
        x = hardswish(main + short)
        _check_finite(x, p)

    # Average-pool the temporal axis onto the coarse grid; the recurrent
    # layer runs over the pooled steps with the channel features as inputs.
    seq = pool_time_bins(x, spec.gru_time_bins).T  # (bins, channels)

    h = np.zeros(spec.gru_hidden)
    w_in = {g: get(f"gru.{g}.w_in") for g in GRU_GATES}
    w_hid = {g: get(f"gru.{g}.w_hid") for g in GRU_GATES}
    b_in = {g: get(f"gru.{g}.b_in") for g in GRU_GATES}
    b_hid = {g: get(f"gru.{g}.b_hid") for g in GRU_GATES}
    for x_t in seq:
        r = _sigmoid(w_in["reset"] @ x_t + b_in["reset"] + w_hid["reset"] @ h + b_hid["reset"])
        z = _sigmoid(w_in["update"] @ x_t + b_in["update"] + w_hid["update"] @ h + b_hid["update"])
        n = np.tanh(w_in["candidate"] @ x_t + b_in["candidate"]
                    + r * (w_hid["candidate"] @ h + b_hid["candidate"]))
        h = (1.0 - z) * n + z * h
    _check_finite(h, "gru")

    logit = float(get("head.weight")[0] @ h + get("head.bias")[0])
    if not math.isfinite(logit):
        raise InferenceError("non-finite activation after head")
    return float(_sigmoid(logit))
