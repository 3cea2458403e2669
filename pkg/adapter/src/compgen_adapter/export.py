"""Embedding export: manifest in, queries.cgem + gallery.cgem out."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import cgem
from .errors import AdapterError
from .manifest import gallery_texts, query_texts, read_rows
from .models import resolve_model


@dataclass(frozen=True)
class ExportJob:
    manifest: Path
    model: str
    queries_path: Path
    gallery_path: Path
    batch_size: int = 32
    device: str = "cpu"

    def __post_init__(self):
        if self.batch_size < 1:
            raise AdapterError("batch size must be >= 1")


@dataclass(frozen=True)
class ExportResult:
    queries_path: Path
    gallery_path: Path
    n_queries: int
    n_gallery: int
    dim: int


def _encode_normalized(model, texts: list[str], batch_size: int) -> np.ndarray:
    chunks = []
    for start in range(0, len(texts), batch_size):
        chunks.append(model.encode(texts[start : start + batch_size]))
    raw = np.vstack(chunks).astype(np.float64)
    norms = np.linalg.norm(raw, axis=1, keepdims=True)
    if np.any(norms == 0.0):
        bad = int(np.flatnonzero(norms.ravel() == 0.0)[0])
        raise AdapterError(f"model produced a zero embedding for row {bad}")
    return (raw / norms).astype(np.float32)


def export_embeddings(job: ExportJob) -> ExportResult:
    """Embed every manifest row and write both CGEM files atomically.

    All manifest validation (row gaps, duplicates, missing text) runs
    before the model is even resolved, so a broken manifest costs no
    inference time and leaves no output files.
    """
    rows = read_rows(job.manifest)
    q_texts = query_texts(rows)
    g_texts = gallery_texts(rows)
    model = resolve_model(job.model, job.device)
    queries = _encode_normalized(model, q_texts, job.batch_size)
    gallery = _encode_normalized(model, g_texts, job.batch_size)
    job.queries_path.parent.mkdir(parents=True, exist_ok=True)
    job.gallery_path.parent.mkdir(parents=True, exist_ok=True)
    cgem.write(queries, job.queries_path)
    cgem.write(gallery, job.gallery_path)
    return ExportResult(
        queries_path=job.queries_path,
        gallery_path=job.gallery_path,
        n_queries=queries.shape[0],
        n_gallery=gallery.shape[0],
        dim=queries.shape[1],
    )
