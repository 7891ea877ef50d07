"""Binary frame blobs and small text-file helpers.

Blob layout (little-endian)::

    magic  b"DFFR"
    dtype  uint8   (1 = float64)
    ndim   uint8
    dims   uint32 * ndim
    data   float64, row-major
"""

from __future__ import annotations

import csv
import io
import os
import struct
from pathlib import Path

import numpy as np

MAGIC = b"DFFR"
FLOAT64 = 1


def encode_frames(arr) -> bytes:
    arr = np.ascontiguousarray(arr, dtype="<f8")
    header = MAGIC + struct.pack("<BB", FLOAT64, arr.ndim) + struct.pack(f"<{arr.ndim}I", *arr.shape)
    return header + arr.tobytes()


def decode_frames(blob: bytes) -> np.ndarray:
    if blob[:4] != MAGIC:
        raise ValueError("not a frame blob (bad magic)")
    dtype, ndim = struct.unpack_from("<BB", blob, 4)
    if dtype != FLOAT64:
        raise ValueError(f"unsupported dtype code {dtype}")
    dims = struct.unpack_from(f"<{ndim}I", blob, 6)
    offset = 6 + 4 * ndim
    count = int(np.prod(dims))
    if len(blob) != offset + 8 * count:
        raise ValueError("frame blob size does not match header")
    return np.frombuffer(blob, dtype="<f8", count=count, offset=offset).astype(np.float64).reshape(dims)


def atomic_write_bytes(path, data: bytes):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(data)
    os.replace(tmp, path)


def atomic_write_text(path, text: str):
    atomic_write_bytes(path, text.encode("utf-8"))


def write_frames(path, arr):
    atomic_write_bytes(path, encode_frames(arr))


def read_frames(path) -> np.ndarray:
    return decode_frames(Path(path).read_bytes())


def write_csv(path, header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    atomic_write_text(path, buf.getvalue())


def read_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def fmt(x) -> str:
    """Stable float formatting for metric files."""
    return format(float(x), ".12g")
