"""Flat binary parameter checkpoints.

Layout (all integers little-endian)::

    magic      4 bytes  b"DFCK"
    version    uint32   (1)
    count      uint32   number of parameters
    then per parameter:
      name_len uint16, name (utf-8)
      ndim     uint8, dims uint32 * ndim
      frozen   uint8 (0/1)
      data     float64 little-endian, row-major, prod(dims) values
"""

from __future__ import annotations

import os
import struct
from pathlib import Path

import numpy as np

from .layers import Param

MAGIC = b"DFCK"
VERSION = 1


def dumps(params: dict[str, Param]) -> bytes:
    chunks = [MAGIC, struct.pack("<II", VERSION, len(params))]
    for name, p in params.items():
        raw = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(raw)))
        chunks.append(raw)
        chunks.append(struct.pack("<B", p.value.ndim))
        chunks.append(struct.pack(f"<{p.value.ndim}I", *p.value.shape))
        chunks.append(struct.pack("<B", int(p.frozen)))
        chunks.append(np.ascontiguousarray(p.value, dtype="<f8").tobytes())
    return b"".join(chunks)


def loads(blob: bytes) -> dict[str, Param]:
    if blob[:4] != MAGIC:
        raise ValueError("not a checkpoint (bad magic)")
    version, count = struct.unpack_from("<II", blob, 4)
    if version != VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    pos = 12
    out = {}
    for _ in range(count):
        (nlen,) = struct.unpack_from("<H", blob, pos)
        pos += 2
        name = blob[pos:pos + nlen].decode("utf-8")
        pos += nlen
        (ndim,) = struct.unpack_from("<B", blob, pos)
        pos += 1
        dims = struct.unpack_from(f"<{ndim}I", blob, pos)
        pos += 4 * ndim
        (frozen,) = struct.unpack_from("<B", blob, pos)
        pos += 1
        size = int(np.prod(dims)) if ndim else 1
        data = np.frombuffer(blob, dtype="<f8", count=size, offset=pos).astype(np.float64)
        pos += 8 * size
        out[name] = Param(data.reshape(dims), frozen=bool(frozen))
    if pos != len(blob):
        raise ValueError("trailing bytes after checkpoint payload")
    return out


def save(path, params: dict[str, Param]):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(dumps(params))
    os.replace(tmp, path)


def load(path) -> dict[str, Param]:
    return loads(Path(path).read_bytes())


def apply(params: dict[str, Param], loaded: dict[str, Param]):
    """Copy loaded values and frozen flags into an existing parameter map."""
    missing = set(params) - set(loaded)
    if missing:
        raise KeyError(f"checkpoint lacks parameters: {sorted(missing)}")
    for name, p in params.items():
        src = loaded[name]
        if src.shape != p.shape:
            raise ValueError(f"{name}: checkpoint shape {src.shape} != model shape {p.shape}")
        p.value[...] = src.value
        p.frozen = src.frozen
