"""Inverted concept index with exact frequency and co-occurrence queries.

Postings map each concept id to the strictly increasing sample ordinals
that contain it. Co-occurrence counts are k-way posting intersections,
smallest list first with early exit, so the rarest concept dominates the
cost.

On-disk format (CGIX, little-endian):

    magic   "CGIX" (4 bytes)
    version u16 = 1
    flags   u16 = 0
    n_samples  u64
    vocab_size u32
    vocab_size records of:
        posting_count   u64
        payload_length  u64
        payload         delta-compressed LEB128 varints
                        (first ordinal absolute, then gaps)
    n_samples sample-id strings, each LEB128 length prefix + UTF-8 bytes

The encoding is canonical, so serializing a loaded index reproduces the
file byte for byte.
"""

from __future__ import annotations

import os
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import IndexFormatError

MAGIC = b"CGIX"
VERSION = 1

_ORDINAL_DTYPE = np.int64


def encode_uvarint(value: int, out: bytearray) -> None:
    """Append an unsigned LEB128 varint."""
    if value < 0:
        raise ValueError("varint must be non-negative")
    while True:
        byte = value & 0x7F
        value >>= 7
        if value:
            out.append(byte | 0x80)
        else:
            out.append(byte)
            return


def decode_uvarint(buf: bytes, offset: int) -> tuple[int, int]:
    """Decode an unsigned LEB128 varint; returns (value, next offset)."""
    result = 0
    shift = 0
    pos = offset
    while True:
        if pos >= len(buf):
            raise IndexFormatError(f"truncated varint at offset {offset}")
        byte = buf[pos]
        pos += 1
        result |= (byte & 0x7F) << shift
        if not byte & 0x80:
            return result, pos
        shift += 7
        if shift > 63:
            raise IndexFormatError(f"varint wider than 64 bits at offset {offset}")


class ConceptIndex:
    """Immutable concept -> sample-ordinal postings over a fixed corpus."""

    def __init__(
        self,
        postings: Sequence[np.ndarray],
        n_samples: int,
        sample_ids: Sequence[str],
    ):
        if len(sample_ids) != n_samples:
            raise ValueError(
                f"sample id table has {len(sample_ids)} entries for {n_samples} samples"
            )
        frozen = []
        for c, p in enumerate(postings):
            arr = np.asarray(p, dtype=_ORDINAL_DTYPE)
            if arr.size:
                if arr[0] < 0 or arr[-1] >= n_samples:
                    raise ValueError(f"concept {c}: ordinal out of range")
                if arr.size > 1 and not np.all(np.diff(arr) > 0):
                    raise ValueError(f"concept {c}: postings not strictly increasing")
            arr.flags.writeable = False
            frozen.append(arr)
        self._postings: tuple[np.ndarray, ...] = tuple(frozen)
        self.n_samples = int(n_samples)
        self.sample_ids: tuple[str, ...] = tuple(sample_ids)

    @property
    def vocab_size(self) -> int:
        return len(self._postings)

    def postings(self, concept_id: int) -> np.ndarray:
        self._check_id(concept_id)
        return self._postings[concept_id]

    def frequency(self, concept_id: int) -> int:
        """Number of corpus samples containing the concept."""
        self._check_id(concept_id)
        return int(self._postings[concept_id].size)

    def frequencies(self, concept_ids: Iterable[int]) -> list[int]:
        return [self.frequency(c) for c in concept_ids]

    def cooccurrence_frequency(self, concept_ids: Iterable[int]) -> int:
        """Number of samples containing every one of the given concepts."""
        ids = set(concept_ids)
        if not ids:
            raise ValueError("co-occurrence frequency is undefined for an empty concept set")
        lists = sorted((self.postings(c) for c in ids), key=len)
        running = lists[0]
        for p in lists[1:]:
            if running.size == 0:
                break
            running = np.intersect1d(running, p, assume_unique=True)
        return int(running.size)

    def _check_id(self, concept_id: int) -> None:
        if not 0 <= concept_id < len(self._postings):
            raise ValueError(
                f"concept id {concept_id} out of range [0, {len(self._postings)})"
            )


def _encode_postings(arr: np.ndarray) -> bytes:
    out = bytearray()
    prev = None
    for v in arr.tolist():
        encode_uvarint(v if prev is None else v - prev, out)
        prev = v
    return bytes(out)


def serialize_index(index: ConceptIndex) -> bytes:
    out = bytearray()
    out += MAGIC
    out += VERSION.to_bytes(2, "little")
    out += (0).to_bytes(2, "little")
    out += index.n_samples.to_bytes(8, "little")
    out += index.vocab_size.to_bytes(4, "little")
    for c in range(index.vocab_size):
        payload = _encode_postings(index.postings(c))
        out += index.frequency(c).to_bytes(8, "little")
        out += len(payload).to_bytes(8, "little")
        out += payload
    for sid in index.sample_ids:
        raw = sid.encode("utf-8")
        encode_uvarint(len(raw), out)
        out += raw
    return bytes(out)


def save_index(index: ConceptIndex, path: str | Path) -> None:
    """Write the index atomically (temp file + rename)."""
    path = Path(path)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_bytes(serialize_index(index))
    os.replace(tmp, path)


def deserialize_index(buf: bytes) -> ConceptIndex:
    if len(buf) < 4 or buf[:4] != MAGIC:
        raise IndexFormatError(f"bad magic at offset 0: expected {MAGIC!r}")
    if len(buf) < 20:
        raise IndexFormatError(f"truncated header at offset {len(buf)}")
    version = int.from_bytes(buf[4:6], "little")
    if version != VERSION:
        raise IndexFormatError(f"unsupported version {version} at offset 4")
    flags = int.from_bytes(buf[6:8], "little")
    if flags != 0:
        raise IndexFormatError(f"unsupported flags {flags:#x} at offset 6")
    n_samples = int.from_bytes(buf[8:16], "little")
    vocab_size = int.from_bytes(buf[16:20], "little")
    pos = 20

    postings = []
    for c in range(vocab_size):
        if pos + 16 > len(buf):
            raise IndexFormatError(
                f"truncated posting header for concept {c} at offset {pos}"
            )
        count = int.from_bytes(buf[pos : pos + 8], "little")
        payload_len = int.from_bytes(buf[pos + 8 : pos + 16], "little")
        pos += 16
        end = pos + payload_len
        if end > len(buf):
            raise IndexFormatError(
                f"truncated posting payload for concept {c} at offset {pos}"
            )
        arr = np.empty(count, dtype=_ORDINAL_DTYPE)
        prev = 0
        for i in range(count):
            gap, pos = decode_uvarint(buf, pos)
            prev = gap if i == 0 else prev + gap
            arr[i] = prev
        if pos != end:
            raise IndexFormatError(
                f"posting payload for concept {c} ends at offset {pos}, expected {end}"
            )
        postings.append(arr)

    sample_ids = []
    for i in range(n_samples):
        length, pos = decode_uvarint(buf, pos)
        if pos + length > len(buf):
            raise IndexFormatError(f"truncated sample id {i} at offset {pos}")
        sample_ids.append(buf[pos : pos + length].decode("utf-8"))
        pos += length
    if pos != len(buf):
        raise IndexFormatError(f"trailing data at offset {pos}")

    try:
        return ConceptIndex(postings, n_samples, sample_ids)
    except ValueError as exc:
        raise IndexFormatError(f"inconsistent index content: {exc}") from exc


def load_index(path: str | Path) -> ConceptIndex:
    return deserialize_index(Path(path).read_bytes())
