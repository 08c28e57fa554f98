"""Shared binary container: JSON header plus named float32 tensors.

Layout: 16-byte magic block, uint32 little-endian header length, UTF-8 JSON
header (which includes the tensor index as a list of {name, shape}), then the
tensors' float32 little-endian row-major payloads concatenated in index
order. Model checkpoints and SVM models both use this with different magics.
"""

import json
import struct
from pathlib import Path

import numpy as np

from .errors import DataError

CHECKPOINT_MAGIC = b"ISPCMODL1".ljust(16, b"\0")
SVM_MAGIC = b"ISPCSVM1".ljust(16, b"\0")


def write_tensors(path, magic: bytes, header: dict, tensors: dict) -> None:
    if len(magic) != 16:
        raise ValueError("magic block must be 16 bytes")
    index = []
    payloads = []
    for name, arr in tensors.items():
        arr = np.ascontiguousarray(arr, dtype="<f4")
        index.append({"name": name, "shape": list(arr.shape)})
        payloads.append(arr.tobytes())
    head = dict(header)
    head["tensors"] = index
    blob = json.dumps(head, sort_keys=True, separators=(",", ":")).encode("utf-8")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(magic)
        fh.write(struct.pack("<I", len(blob)))
        fh.write(blob)
        for p in payloads:
            fh.write(p)


def read_tensors(path, magic: bytes):
    """Returns (header dict without the tensor index, {name: float64 array})."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such file: {path}")
    blob = path.read_bytes()
    if len(blob) < 20 or blob[:16] != magic:
        raise DataError(f"{path}: bad magic for this container kind")
    (hlen,) = struct.unpack_from("<I", blob, 16)
    try:
        header = json.loads(blob[20:20 + hlen].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise DataError(f"{path}: corrupt header: {exc}") from exc
    index = header.pop("tensors", None)
    if index is None:
        raise DataError(f"{path}: header missing tensor index")
    tensors = {}
    offset = 20 + hlen
    for entry in index:
        shape = tuple(entry["shape"])
        count = int(np.prod(shape)) if shape else 1
        nbytes = count * 4
        if offset + nbytes > len(blob):
            raise DataError(f"{path}: truncated tensor payload for {entry['name']}")
        flat = np.frombuffer(blob, dtype="<f4", count=count, offset=offset)
        tensors[entry["name"]] = flat.reshape(shape).astype(np.float64)
        offset += nbytes
    if offset != len(blob):
        raise DataError(f"{path}: {len(blob) - offset} trailing bytes")
    return header, tensors
