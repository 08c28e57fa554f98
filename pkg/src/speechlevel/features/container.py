"""Binary matrix container for exported features.

Layout: 16-byte magic block (b"ISPCFEAT" zero-padded), then three little-
endian uint32 fields (version, rows, cols), then rows*cols float32 values in
row-major order.
"""

import struct
from pathlib import Path

import numpy as np

from ..errors import DataError

MAGIC = b"ISPCFEAT".ljust(16, b"\0")
VERSION = 1
_HEAD = struct.Struct("<III")


def write_matrix(path, values: np.ndarray) -> None:
    arr = np.ascontiguousarray(values, dtype="<f4")
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {values.shape}")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEAD.pack(VERSION, arr.shape[0], arr.shape[1]))
        fh.write(arr.tobytes())


def read_matrix(path) -> np.ndarray:
    path = Path(path)
    if not path.exists():
        raise DataError(f"no such feature file: {path}")
    blob = path.read_bytes()
    if len(blob) < 16 + _HEAD.size or blob[:16] != MAGIC:
        raise DataError(f"{path}: not a feature container (bad magic)")
    version, rows, cols = _HEAD.unpack_from(blob, 16)
    if version != VERSION:
        raise DataError(f"{path}: unsupported container version {version}")
    body = blob[16 + _HEAD.size:]
    expected = rows * cols * 4
    if len(body) != expected:
        raise DataError(f"{path}: payload is {len(body)} bytes, "
                        f"expected {expected}")
    return np.frombuffer(body, dtype="<f4").reshape(rows, cols).astype(np.float64)
