"""Dense embedding matrices and their binary file format.

On-disk format (CGEM, little-endian):

    magic    "CGEM" (4 bytes)
    version  u16 = 1
    dtype    u16 = 1 (float32)
    rows     u64
    dim      u32
    reserved u32 = 0
    rows * dim float32 values, row-major

Row order is the contract with the test-set manifest: payload_row and
gt_rows index straight into these matrices. Loading and re-saving a file
reproduces it byte for byte (values are never re-encoded).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import EmbeddingFormatError

MAGIC = b"CGEM"
VERSION = 1
DTYPE_F32 = 1

UNIT_NORM_TOL = 1e-5


@dataclass
class EmbeddingMatrix:
    data: np.ndarray  # (rows, dim) float32
    normalized: bool = False

    def __post_init__(self):
        arr = np.asarray(self.data, dtype=np.float32)
        if arr.ndim != 2:
            raise ValueError(f"embedding matrix must be 2-D, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("embedding matrix contains non-finite values")
        self.data = arr

    @property
    def rows(self) -> int:
        return self.data.shape[0]

    @property
    def dim(self) -> int:
        return self.data.shape[1]


def row_norms(m: EmbeddingMatrix) -> np.ndarray:
    return np.linalg.norm(m.data.astype(np.float64), axis=1)


def is_unit_normalized(m: EmbeddingMatrix, tol: float = UNIT_NORM_TOL) -> bool:
    if m.rows == 0:
        return True
    return bool(np.max(np.abs(row_norms(m) - 1.0)) <= tol)


def normalize_rows(m: EmbeddingMatrix) -> EmbeddingMatrix:
    """Scale every row to unit L2 norm; rejects zero rows by index."""
    norms = row_norms(m)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise ValueError(f"cannot normalize zero-norm row {int(zero[0])}")
    scaled = (m.data.astype(np.float64) / norms[:, None]).astype(np.float32)
    return EmbeddingMatrix(scaled, normalized=True)


def serialize_embeddings(m: EmbeddingMatrix) -> bytes:
    out = bytearray()
    out += MAGIC
    out += VERSION.to_bytes(2, "little")
    out += DTYPE_F32.to_bytes(2, "little")
    out += m.rows.to_bytes(8, "little")
    out += m.dim.to_bytes(4, "little")
    out += (0).to_bytes(4, "little")
    out += np.ascontiguousarray(m.data, dtype="<f4").tobytes()
    return bytes(out)


def save_embeddings(m: EmbeddingMatrix, path: str | Path) -> None:
    """Write the matrix atomically (temp file + rename)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(serialize_embeddings(m))
    os.replace(tmp, path)


def deserialize_embeddings(buf: bytes) -> EmbeddingMatrix:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise EmbeddingFormatError(f"bad magic at offset 0: expected {MAGIC!r}")
    if len(buf) < 24:
        raise EmbeddingFormatError(f"truncated header at offset {len(buf)}")
    version = int.from_bytes(buf[4:6], "little")
    if version != VERSION:
        raise EmbeddingFormatError(f"unsupported version {version} at offset 4")
    dtype = int.from_bytes(buf[6:8], "little")
    if dtype != DTYPE_F32:
        raise EmbeddingFormatError(f"unsupported dtype {dtype} at offset 6")
    rows = int.from_bytes(buf[8:16], "little")
    dim = int.from_bytes(buf[16:20], "little")
    reserved = int.from_bytes(buf[20:24], "little")
    if reserved != 0:
        raise EmbeddingFormatError(f"nonzero reserved field at offset 20")
    if dim == 0:
        raise EmbeddingFormatError("dimension 0 at offset 16")
    expected = 24 + rows * dim * 4
    if len(buf) < expected:
        raise EmbeddingFormatError(
            f"truncated payload: {len(buf)} bytes, expected {expected} (at offset {len(buf)})"
        )
    if len(buf) > expected:
        raise EmbeddingFormatError(f"trailing data at offset {expected}")
    data = np.frombuffer(buf, dtype="<f4", count=rows * dim, offset=24)
    data = data.reshape(rows, dim).copy()
    try:
        m = EmbeddingMatrix(data)
    except ValueError as exc:
        raise EmbeddingFormatError(f"invalid embedding content: {exc}") from exc
    m.normalized = is_unit_normalized(m)
    return m


def load_embeddings(path: str | Path) -> EmbeddingMatrix:
    return deserialize_embeddings(Path(path).read_bytes())
