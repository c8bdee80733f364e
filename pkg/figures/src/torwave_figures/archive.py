"""Reader/writer for the simulator's binary snapshot archives.

Layout (little-endian throughout): a 20-byte header of magic ``ATRL``,
version u32 (currently 1), n1 u32, n2 u32, snapshot count u32; then for each
snapshot a float64 time followed by n1*n2 complex values in row-major order
stored as interleaved (re, im) float64 pairs.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

MAGIC = b"ATRL"
VERSION = 1
HEADER = struct.Struct("<4sIIII")


class ArchiveFormatError(ValueError):
    """The file does not follow the snapshot archive layout."""


@dataclass(frozen=True)
class SnapshotArchive:
    """Parsed snapshot archive: grid shape and (time, field) pairs."""

    n1: int
    n2: int
    times: np.ndarray
    fields: list[np.ndarray]

    @property
    def count(self) -> int:
        return len(self.fields)


def read_archive(path: str | Path) -> SnapshotArchive:
    raw = Path(path).read_bytes()
    if len(raw) < HEADER.size:
        raise ArchiveFormatError(f"{path}: too short for a header ({len(raw)} bytes)")
    magic, version, n1, n2, count = HEADER.unpack_from(raw, 0)
    if magic != MAGIC:
        raise ArchiveFormatError(f"{path}: bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise ArchiveFormatError(f"{path}: unsupported version {version}")
    per_snapshot = 8 + 16 * n1 * n2
    expected = HEADER.size + count * per_snapshot
    if len(raw) != expected:
        raise ArchiveFormatError(
            f"{path}: {len(raw)} bytes, but header promises {expected} "
            f"({count} snapshots of {per_snapshot} bytes)"
        )
    times = np.empty(count)
    fields: list[np.ndarray] = []
    offset = HEADER.size
    for i in range(count):
        (times[i],) = struct.unpack_from("<d", raw, offset)
        offset += 8
        flat = np.frombuffer(raw, dtype="<c16", count=n1 * n2, offset=offset)
        fields.append(flat.reshape(n1, n2).copy())
        offset += 16 * n1 * n2
    return SnapshotArchive(n1=n1, n2=n2, times=times, fields=fields)


def write_archive(path: str | Path, times, fields) -> None:
    """Serialize (time, field) pairs; the inverse of ``read_archive``."""
    fields = [np.asarray(f, dtype=complex) for f in fields]
    if not fields:
        raise ValueError("need at least one snapshot")
    n1, n2 = fields[0].shape
    if any(f.shape != (n1, n2) for f in fields):
        raise ValueError("all snapshots must share one shape")
    if len(list(times)) != len(fields):
        raise ValueError("times and fields must pair up")
    with open(Path(path), "wb") as fh:
        fh.write(HEADER.pack(MAGIC, VERSION, n1, n2, len(fields)))
        for t, f in zip(times, fields):
            fh.write(struct.pack("<d", float(t)))
            fh.write(np.ascontiguousarray(f).astype("<c16").tobytes())
