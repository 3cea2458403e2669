"""Minimal CGEM writer.

Layout (little-endian): magic "CGEM", version u16 = 1, dtype u16 = 1
(float32), rows u64, dim u32, reserved u32 = 0, then rows*dim float32
values row-major. This mirrors the retrieval toolkit's loader; the file
is the entire contract between the two packages.
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

MAGIC = b"CGEM"
VERSION = 1
DTYPE_F32 = 1


def serialize(matrix: np.ndarray) -> bytes:
    m = np.ascontiguousarray(matrix, dtype="<f4")
    if m.ndim != 2:
        raise ValueError(f"embedding matrix must be 2-D, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("embedding matrix contains non-finite values")
    out = bytearray()
    out += MAGIC
    out += VERSION.to_bytes(2, "little")
    out += DTYPE_F32.to_bytes(2, "little")
    out += m.shape[0].to_bytes(8, "little")
    out += m.shape[1].to_bytes(4, "little")
    out += (0).to_bytes(4, "little")
    out += m.tobytes()
    return bytes(out)


def write(matrix: np.ndarray, path: str | Path) -> None:
    # temp-and-rename so a crash never leaves a partial file behind
    path = Path(path)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_bytes(serialize(matrix))
    os.replace(tmp, path)
