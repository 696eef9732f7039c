"""Snapshot files and CSV time series.

Snapshot layout (all little endian)::

    b"APFS" | u8 version=1 | u8 dim | 2 reserved bytes
    u32 n_i per axis | f64 L_i per axis | f64 time
    payload: d components of real-space values, row-major f64
    u32 CRC-32 of the payload

Storing physical values keeps the files independent of the transform
normalisation.
"""
from __future__ import annotations

import csv
import math
import os
import struct
import zlib
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from .spectral import Grid, forward, inverse, truncate_nyquist
from .timestep import State

__all__ = [
    "SnapshotError",
    "Snapshot",
    "write_snapshot",
    "read_snapshot",
    "encode_snapshot",
    "decode_snapshot",
    "write_timeseries",
    "read_timeseries",
    "write_energy_csv",
    "write_relative_csv",
]

MAGIC = b"APFS"
VERSION = 1


class SnapshotError(ValueError):
    """Malformed, truncated or corrupted snapshot."""


@dataclass(frozen=True)
class Snapshot:
    grid: Grid
    t: float
    values: np.ndarray  # (d, *n), float64

    @classmethod
    def from_state(cls, grid: Grid, state: State) -> "Snapshot":
        return cls(grid, float(state.t), np.ascontiguousarray(inverse(grid, state.p_hat)))

    def to_state(self) -> State:
        """Spectral state; Nyquist modes are cleared as for every solver field."""
        return State(self.t, truncate_nyquist(self.grid, forward(self.grid, self.values)))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Snapshot)
            and self.grid == other.grid
            and self.t == other.t
            and np.array_equal(self.values, other.values)
        )


def encode_snapshot(snap: Snapshot) -> bytes:
    g = snap.grid
    vals = np.asarray(snap.values, dtype="<f8")
    if vals.shape != (g.dim,) + g.n:
        raise SnapshotError(f"values shape {vals.shape} does not match grid {g.n}")
    header = MAGIC + struct.pack("<BB2x", VERSION, g.dim)
    header += struct.pack(f"<{g.dim}I", *g.n)
    header += struct.pack(f"<{g.dim}d", *g.box)
    header += struct.pack("<d", snap.t)
    payload = np.ascontiguousarray(vals).tobytes()
    return header + payload + struct.pack("<I", zlib.crc32(payload))


def decode_snapshot(data: bytes) -> Snapshot:
    if len(data) < 8:
        raise SnapshotError("truncated header")
    if data[:4] != MAGIC:
        raise SnapshotError(f"bad magic {data[:4]!r}")
    version, dim = struct.unpack_from("<BB", data, 4)
    if version != VERSION:
        raise SnapshotError(f"unsupported snapshot version {version}")
    if dim not in (2, 3):
        raise SnapshotError(f"bad dimension {dim}")
    off = 8
    head = 12 * dim + 8
    if len(data) < off + head:
        raise SnapshotError("truncated header")
    n = struct.unpack_from(f"<{dim}I", data, off)
    off += 4 * dim
    box = struct.unpack_from(f"<{dim}d", data, off)
    off += 8 * dim
    (t,) = struct.unpack_from("<d", data, off)
    off += 8
    size = 8 * dim * int(np.prod(n))
    if len(data) != off + size + 4:
        raise SnapshotError(f"expected {off + size + 4} bytes, got {len(data)}")
    payload = data[off: off + size]
    (crc,) = struct.unpack_from("<I", data, off + size)
    if zlib.crc32(payload) != crc:
        raise SnapshotError("payload checksum mismatch")
    try:
        grid = Grid(dim, n, box)
    except ValueError as exc:
        raise SnapshotError(str(exc)) from exc
    values = np.frombuffer(payload, dtype="<f8").reshape((dim,) + tuple(n)).astype(float)
    return Snapshot(grid, t, values)


def write_snapshot(snap: Snapshot | State, path, grid: Grid | None = None) -> None:
    """Write a snapshot; a :class:`State` needs its ``grid``."""
    if isinstance(snap, State):
        if grid is None:
            raise TypeError("writing a State requires the grid")
        snap = Snapshot.from_state(grid, snap)
    with open(path, "wb") as fh:
        fh.write(encode_snapshot(snap))


def read_snapshot(path) -> Snapshot:
    with open(path, "rb") as fh:
        return decode_snapshot(fh.read())


def _cell(v) -> str:
    if v is None:
        return ""
    v = float(v)
    return "" if math.isnan(v) else "%.17g" % v


def write_timeseries(
    path, columns: Sequence[str], data: Mapping[str, Iterable[float]] | None
) -> None:
    """CSV with a fixed header; missing columns are written as empty cells."""
    data = data or {}
    n = max((len(np.atleast_1d(v)) for v in data.values()), default=0)
    cols = [list(np.atleast_1d(data[c])) if c in data and data[c] is not None else [None] * n
            for c in columns]
    tmp = f"{path}.part"
    with open(tmp, "w", newline="", encoding="ascii") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for i in range(n):
            w.writerow([_cell(col[i]) for col in cols])
    os.replace(tmp, path)


def read_timeseries(path) -> dict[str, np.ndarray]:
    """Inverse of :func:`write_timeseries`; empty cells become NaN."""
    with open(path, newline="", encoding="ascii") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    return {
        name: np.array([float(r[j]) if r[j] else math.nan for r in body], dtype=float)
        for j, name in enumerate(header)
    }


def write_energy_csv(ledger, path) -> None:
    from .diagnostics import ENERGY_COLUMNS

    write_timeseries(path, ENERGY_COLUMNS, None if ledger is None else ledger.columns)


def write_relative_csv(report, path) -> None:
    from .diagnostics import RELATIVE_COLUMNS

    data = None if report is None else {c: getattr(report, c) for c in RELATIVE_COLUMNS}
    write_timeseries(path, RELATIVE_COLUMNS, data)
