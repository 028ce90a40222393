"""Deterministic on-disk formats: CSV series, binary snapshots, JSON reports."""

from __future__ import annotations

import hashlib
import json
import math
import struct
from pathlib import Path

import numpy as np

from .integrator import COLUMNS, TrajectoryRecord
from .spectral import Grid, SpectralField, State

__all__ = [
    "SNAPSHOT_MAGIC",
    "SNAPSHOT_VERSION",
    "write_series_csv",
    "read_series_csv",
    "encode_snapshot",
    "decode_snapshot",
    "write_snapshot",
    "read_snapshot",
    "write_json",
    "sha256_file",
]

SNAPSHOT_MAGIC = b"NLWS"
SNAPSHOT_VERSION = 1
_HEADER = struct.Struct("<4sIBId")


def write_series_csv(path: Path, rec: TrajectoryRecord) -> None:
    """CSV with the fixed column set, every value at 17 significant digits."""
    cols = rec.columns()
    data = np.column_stack([cols[name] for name in COLUMNS])
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(COLUMNS) + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")


def read_series_csv(path: Path) -> dict[str, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        data = np.loadtxt(fh, delimiter=",", ndmin=2)
    return {name: data[:, i] for i, name in enumerate(header)}


def encode_snapshot(xi: State, t: float) -> bytes:
    grid = xi.grid
    head = _HEADER.pack(SNAPSHOT_MAGIC, SNAPSHOT_VERSION, grid.dim, grid.n_modes, float(t))
    body = np.ascontiguousarray(xi.u.coeff, dtype="<f8").tobytes()
    body += np.ascontiguousarray(xi.ut.coeff, dtype="<f8").tobytes()
    return head + body


def decode_snapshot(blob: bytes, n_quad: int | None = None) -> tuple[State, float]:
    """Inverse of :func:`encode_snapshot`.

    Raises
    ------
    ValueError
        On a bad magic, unknown version or truncated payload.
    """
    if len(blob) < _HEADER.size:
        raise ValueError("snapshot shorter than its header")
    magic, version, dim, n_modes, t = _HEADER.unpack_from(blob)
    if magic != SNAPSHOT_MAGIC:
        raise ValueError(f"bad snapshot magic {magic!r}")
    if version != SNAPSHOT_VERSION:
        raise ValueError(f"unsupported snapshot version {version}")
    grid = Grid(dim, n_modes, n_quad)
    size = n_modes**dim
    expected = _HEADER.size + 16 * size
    if len(blob) != expected:
        raise ValueError(f"snapshot payload has {len(blob)} bytes, expected {expected}")
    arr = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size).astype(float)
    u = arr[:size].reshape(grid.shape)
    ut = arr[size:].reshape(grid.shape)
    return State(SpectralField(grid, u), SpectralField(grid, ut)), t


def write_snapshot(path: Path, xi: State, t: float) -> None:
    Path(path).write_bytes(encode_snapshot(xi, t))


def read_snapshot(path: Path, n_quad: int | None = None) -> tuple[State, float]:
    return decode_snapshot(Path(path).read_bytes(), n_quad)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return x if math.isfinite(x) else None
    return obj


def write_json(path: Path, obj) -> None:
    """Sorted keys, fixed indent, non-finite floats as null."""
    text = json.dumps(_jsonable(obj), sort_keys=True, indent=2, allow_nan=False)
    Path(path).write_text(text + "\n", encoding="utf-8")


def sha256_file(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
