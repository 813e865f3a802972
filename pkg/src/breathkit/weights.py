"""Weight-bundle interchange format (.bkw).

Layout:
  line 1   ASCII magic ``BKW`` + format version + LF  (e.g. ``BKW1``)
  line 2   ASCII decimal byte length of the JSON header + LF
  header   UTF-8 JSON: {"format_version", "spec", "tensors": [{name, shape,
           offset}, ...]} followed by one LF
  blob     little-endian IEEE-754 32-bit reals, tensors at their offsets

The header is human-inspectable with ``head``; the blob round-trips float32
values bit-exactly. Offsets are byte positions relative to the blob start.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .network import NetworkSpec

MAGIC = b"BKW"
SUPPORTED_VERSIONS = (1,)


class WeightFormatError(ValueError):
    """Malformed bundle file or bundle/spec mismatch; names the tensor at fault."""


@dataclass
class WeightBundle:
    spec: NetworkSpec
    tensors: dict[str, np.ndarray] = field(repr=False)
    format_version: int = 1

    def __post_init__(self) -> None:
        self.tensors = {k: np.ascontiguousarray(v, dtype=np.float32)
                        for k, v in self.tensors.items()}
        validate_tensors(self.spec, self.tensors)

    def param_count(self) -> int:
        return sum(int(v.size) for v in self.tensors.values())


def validate_tensors(spec: NetworkSpec, tensors: dict) -> None:
    """Every tensor the spec demands must be present exactly once with the
    right shape, and nothing else may be present."""
    expected = dict(spec.tensor_specs())
    for name, shape in expected.items():
        if name not in tensors:
            raise WeightFormatError(f"missing tensor {name!r}")
        got = tuple(tensors[name].shape)
        if got != shape:
            raise WeightFormatError(f"tensor {name!r} has shape {got}, spec demands {shape}")
    extra = set(tensors) - set(expected)
    if extra:
        raise WeightFormatError(f"unexpected tensors not in spec: {sorted(extra)}")


def zero_bundle(spec: NetworkSpec) -> WeightBundle:
    """All-zero weights (useful as a structural fixture; forward returns 0.5)."""
    return WeightBundle(spec, {name: np.zeros(shape, dtype=np.float32)
                               for name, shape in spec.tensor_specs()})


def random_bundle(spec: NetworkSpec, seed: int = 0, scale: float = 0.05) -> WeightBundle:
    """Random weights with unit running variance so activations stay finite."""
    rng = np.random.default_rng(seed)
    tensors = {}
    for name, shape in spec.tensor_specs():
        if name.endswith("running_var") or name.endswith(".gamma"):
            tensors[name] = np.ones(shape, dtype=np.float32)
        elif name.endswith("running_mean") or name.endswith(".beta"):
            tensors[name] = np.zeros(shape, dtype=np.float32)
        else:
            tensors[name] = rng.normal(0.0, scale, size=shape).astype(np.float32)
    return WeightBundle(spec, tensors)


def write_weights(bundle: WeightBundle, path) -> None:
    names = [name for name, _ in bundle.spec.tensor_specs()]
    offset = 0
    entries = []
    blobs = []
    for name in names:
        arr = bundle.tensors[name]
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset})
        raw = arr.astype("<f4").tobytes()
        blobs.append(raw)
        offset += len(raw)
    header = {
        "format_version": bundle.format_version,
        "spec": bundle.spec.to_json_dict(),
        "tensors": entries,
    }
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(str(path), "wb") as fh:
        fh.write(MAGIC + str(bundle.format_version).encode() + b"\n")
        fh.write(str(len(header_bytes)).encode() + b"\n")
        fh.write(header_bytes)
        fh.write(b"\n")
        fh.write(b"".join(blobs))


def read_weights(path) -> WeightBundle:
    path = str(path)
    with open(path, "rb") as fh:
        magic_line = fh.readline().rstrip(b"\n")
        if not magic_line.startswith(MAGIC):
            raise WeightFormatError(f"{path}: not a weight bundle (bad magic)")
        try:
            version = int(magic_line[len(MAGIC):])
        except ValueError:
            raise WeightFormatError(f"{path}: unreadable format version") from None
        if version not in SUPPORTED_VERSIONS:
            raise WeightFormatError(f"{path}: unsupported format version {version}")
        try:
            header_len = int(fh.readline().rstrip(b"\n"))
        except ValueError:
            raise WeightFormatError(f"{path}: unreadable header length") from None
        header = json.loads(fh.read(header_len).decode("utf-8"))
        if fh.read(1) != b"\n":
            raise WeightFormatError(f"{path}: header not terminated")
        blob = fh.read()
    if int(header["format_version"]) != version:
        raise WeightFormatError(f"{path}: header/magic version mismatch")
    spec = NetworkSpec.from_json_dict(header["spec"])
    tensors = {}
    for entry in header["tensors"]:
        name, shape, off = entry["name"], tuple(entry["shape"]), int(entry["offset"])
        count = int(np.prod(shape)) if shape else 1
        end = off + 4 * count
        if end > len(blob):
            raise WeightFormatError(f"{path}: tensor {name!r} extends past end of blob")
        tensors[name] = np.frombuffer(blob[off:end], dtype="<f4").reshape(shape).copy()
    return WeightBundle(spec=spec, tensors=tensors, format_version=version)
