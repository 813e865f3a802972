"""Reader/writer for the .bkw weight-bundle format.

Layout: ``BKW<version>\\n``, ASCII header length + ``\\n``, JSON header
(format_version, spec, tensor table with byte offsets), ``\\n``, then a
little-endian float32 blob. Implemented here from the format documentation;
round trips are bit-exact.
"""

from __future__ import annotations

import json

import numpy as np

from .netspec import NetSpec

MAGIC = b"BKW"
FORMAT_VERSION = 1


class BundleError(ValueError):
    pass


def validate(spec: NetSpec, tensors: dict) -> None:
    expected = dict(spec.tensor_specs())
    for name, shape in expected.items():
        if name not in tensors:
            raise BundleError(f"missing tensor {name!r}")
        if tuple(tensors[name].shape) != shape:
            raise BundleError(
                f"tensor {name!r} has shape {tuple(tensors[name].shape)}, "
                f"spec demands {shape}"
            )
    extra = set(tensors) - set(expected)
    if extra:
        raise BundleError(f"unexpected tensors: {sorted(extra)}")


def write_bundle(spec: NetSpec, tensors: dict, path) -> None:
    tensors = {k: np.ascontiguousarray(v, dtype=np.float32) for k, v in tensors.items()}
    validate(spec, tensors)
    entries, blobs = [], []
    offset = 0
    for name, _ in spec.tensor_specs():
        raw = tensors[name].astype("<f4").tobytes()
        entries.append({"name": name, "shape": list(tensors[name].shape),
                        "offset": offset})
        blobs.append(raw)
        offset += len(raw)
    header = {"format_version": FORMAT_VERSION, "spec": spec.to_json_dict(),
              "tensors": entries}
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(str(path), "wb") as fh:
        fh.write(MAGIC + str(FORMAT_VERSION).encode() + b"\n")
        fh.write(str(len(header_bytes)).encode() + b"\n")
        fh.write(header_bytes)
        fh.write(b"\n")
        fh.write(b"".join(blobs))


def read_bundle(path) -> tuple[NetSpec, dict]:
    with open(str(path), "rb") as fh:
        magic = fh.readline().rstrip(b"\n")
        if not magic.startswith(MAGIC):
            raise BundleError(f"{path}: bad magic")
        version = int(magic[len(MAGIC):])
        if version != FORMAT_VERSION:
            raise BundleError(f"{path}: unsupported format version {version}")
        header_len = int(fh.readline().rstrip(b"\n"))
        header = json.loads(fh.read(header_len).decode("utf-8"))
        fh.read(1)
        blob = fh.read()
    spec = NetSpec.from_json_dict(header["spec"])
    tensors = {}
    for entry in header["tensors"]:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        off = int(entry["offset"])
        tensors[entry["name"]] = (
            np.frombuffer(blob[off:off + 4 * count], dtype="<f4").reshape(shape).copy()
        )
    validate(spec, tensors)
    return spec, tensors
