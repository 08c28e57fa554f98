"""Strict readers for the exported artifact formats.

Anything that deviates from the documented schema raises SchemaError with
the offending column (or key) in the message, before any output is written.
"""

import csv
import json
import struct
from pathlib import Path

import numpy as np

ATTENTION_COLUMNS = ("frame_time_s", "alpha", "mean_weight")
WAVE_COLUMNS = ("time_s", "amplitude")
SIDECAR_PREFIX = ("path", "speaker_id", "score", "label", "duration_s",
                  "n_rows", "n_cols")
REPORT_KEYS = ("condition", "accuracies", "mean_accuracy", "std_accuracy")

CONTAINER_MAGIC = b"ISPCFEAT".ljust(16, b"\0")
CONTAINER_VERSION = 1
_CONTAINER_HEAD = struct.Struct("<III")


class SchemaError(Exception):
    """The input does not match the documented artifact schema."""


def _rows(path):
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"no such input: {path}")
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise SchemaError(f"{path}: empty file, no header")
    return rows


def _check_header(path, header, expected):
    for i, want in enumerate(expected):
        got = header[i] if i < len(header) else None
        if got != want:
            raise SchemaError(f"{path}: column {i} is {got!r}, "
                              f"expected {want!r}")
    if len(header) > len(expected):
        raise SchemaError(f"{path}: unexpected extra column "
                          f"{header[len(expected)]!r}")


def _numeric_table(path, rows, columns):
    if len(rows) < 2:
        raise SchemaError(f"{path}: no data rows")
    out = {name: np.empty(len(rows) - 1) for name in columns}
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(columns):
            raise SchemaError(f"{path}: row {r} has {len(row)} fields, "
                              f"expected {len(columns)}")
        for name, cell in zip(columns, row):
            try:
                out[name][r - 2] = float(cell)
            except ValueError:
                raise SchemaError(f"{path}: column {name!r} row {r}: "
                                  f"{cell!r} is not a number") from None
    return out


def read_attention_csv(path):
    """Columns frame_time_s, alpha, mean_weight; all numeric."""
    rows = _rows(path)
    _check_header(path, rows[0], ATTENTION_COLUMNS)
    return _numeric_table(path, rows, ATTENTION_COLUMNS)


def read_wave_csv(path):
    """Columns time_s, amplitude; all numeric."""
    rows = _rows(path)
    _check_header(path, rows[0], WAVE_COLUMNS)
    return _numeric_table(path, rows, WAVE_COLUMNS)


def read_sidecar_csv(path):
    """The per-file feature summary; returns the duration_s column.

    Header is the fixed prefix plus f0..f{d-1} mean-feature columns.
    """
    rows = _rows(path)
    header = rows[0]
    _check_header(path, header[:len(SIDECAR_PREFIX)], SIDECAR_PREFIX)
    for i, name in enumerate(header[len(SIDECAR_PREFIX):]):
        if name != f"f{i}":
            raise SchemaError(f"{path}: column {len(SIDECAR_PREFIX) + i} is "
                              f"{name!r}, expected 'f{i}'")
    if len(rows) < 2:
        raise SchemaError(f"{path}: no data rows")
    idx = header.index("duration_s")
    durations = np.empty(len(rows) - 1)
    for r, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise SchemaError(f"{path}: row {r} has {len(row)} fields, "
                              f"expected {len(header)}")
        try:
            durations[r - 2] = float(row[idx])
        except ValueError:
            raise SchemaError(f"{path}: column 'duration_s' row {r}: "
                              f"{row[idx]!r} is not a number") from None
    return durations


def read_feature_container(path):
    """Binary matrix: 16-byte magic b"ISPCFEAT" (zero padded), three
    little-endian uint32s (version, rows, cols), then row-major float32."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"no such input: {path}")
    blob = path.read_bytes()
    if len(blob) < 16 + _CONTAINER_HEAD.size or blob[:16] != CONTAINER_MAGIC:
        raise SchemaError(f"{path}: bad container magic")
    version, rows, cols = _CONTAINER_HEAD.unpack_from(blob, 16)
    if version != CONTAINER_VERSION:
        raise SchemaError(f"{path}: unsupported container version {version}")
    body = blob[16 + _CONTAINER_HEAD.size:]
    if len(body) != rows * cols * 4:
        raise SchemaError(f"{path}: payload is {len(body)} bytes, expected "
                          f"{rows * cols * 4}")
    return np.frombuffer(body, dtype="<f4").reshape(rows, cols)


def read_report_json(path):
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"no such input: {path}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise SchemaError(f"{path}: expected a JSON object")
    for key in REPORT_KEYS:
        if key not in doc:
            raise SchemaError(f"{path}: missing key {key!r}")
    if not isinstance(doc["accuracies"], list) or not doc["accuracies"]:
        raise SchemaError(f"{path}: key 'accuracies' must be a non-empty list")
    for v in doc["accuracies"]:
        if not isinstance(v, (int, float)):
            raise SchemaError(f"{path}: key 'accuracies' holds {v!r}, "
                              "not a number")
    return doc
