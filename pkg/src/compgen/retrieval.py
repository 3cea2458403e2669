"""Per-sample Recall@k over dense embeddings.

Similarity is the dot product between unit-normalized rows.  The rank of
a gallery row is its 1-based position after sorting by descending
similarity with ties broken by ascending row index; a sample's rank is
the best rank among its ground-truth rows (any-of semantics, which
covers the several-captions-per-image case).  Outcomes carry the
curation label and the sample's aggregate corpus frequency so the
predictor can consume them directly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .curation import CuratedTestSet
from .embeddings import EmbeddingMatrix
from .errors import InputError, ManifestError
from .index import ConceptIndex
from .predictor import sample_frequency

DEFAULT_KS = (1, 5, 10)


@dataclass(frozen=True)
class EvalOutcome:
    test_id: str
    label: str
    rank: int | None  # None for simulated outcomes with no ranking stage
    y_at_k: dict[int, int]
    f_avg: float
    f_cap: int


def _check_ks(ks: Iterable[int]) -> tuple[int, ...]:
    out = tuple(sorted(set(int(k) for k in ks)))
    if not out or out[0] < 1:
        raise ValueError("ks must be a non-empty collection of integers >= 1")
    return out


def rank_of_best_gt(
    query: np.ndarray, gallery: EmbeddingMatrix, gt_rows: Sequence[int]
) -> int:
    """Best 1-based rank over gt_rows under descending-similarity order."""
    if len(gt_rows) == 0:
        raise ValueError("gt_rows is empty")
    q = np.asarray(query, dtype=np.float32).ravel()
    if q.size != gallery.dim:
        raise ValueError(f"query dim {q.size} does not match gallery dim {gallery.dim}")
    sims = gallery.data @ q
    best = None
    for g in gt_rows:
        g = int(g)
        if not 0 <= g < gallery.rows:
            raise ValueError(f"gt row {g} out of range for gallery with {gallery.rows} rows")
        s = sims[g]
        # ties lose to lower row indices only
        rank = 1 + int(np.count_nonzero(sims > s)) + int(np.count_nonzero(sims[:g] == s))
        if best is None or rank < best:
            best = rank
    return best


def evaluate(
    test: CuratedTestSet,
    queries: EmbeddingMatrix,
    gallery: EmbeddingMatrix,
    index: ConceptIndex | None = None,
    ks: Iterable[int] = DEFAULT_KS,
) -> list[EvalOutcome]:
    """Rank every non-excluded curated sample; excluded samples are skipped.

    Per-concept frequencies come from the index when one is given,
    otherwise from the counts stored at curation time.
    """
    ks = _check_ks(ks)
    if queries.dim != gallery.dim:
        raise ValueError(f"queries dim {queries.dim} does not match gallery dim {gallery.dim}")
    if not queries.normalized or not gallery.normalized:
        raise ValueError("queries and gallery must be unit-normalized (see normalize_rows)")
    outcomes = []
    for c in test.samples:
        if c.label == "excluded":
            continue
        s = c.sample
        if not 0 <= s.payload_row < queries.rows:
            raise ManifestError(
                f"sample {s.test_id!r}: payload row {s.payload_row} out of range "
                f"for queries with {queries.rows} rows"
            )
        bad = [g for g in s.gt_rows if not 0 <= g < gallery.rows]
        if bad:
            raise ManifestError(
                f"sample {s.test_id!r}: gt rows {bad} out of range "
                f"for gallery with {gallery.rows} rows"
            )
        rank = rank_of_best_gt(queries.data[s.payload_row], gallery, s.gt_rows)
        if index is not None:
            freqs = index.frequencies(c.concept_ids)
        else:
            freqs = c.f_per_concept
        outcomes.append(
            EvalOutcome(
                test_id=s.test_id,
                label=c.label,
                rank=rank,
                y_at_k={k: int(rank <= k) for k in ks},
                f_avg=sample_frequency(freqs),
                f_cap=c.f_cap,
            )
        )
    return outcomes


def curated_gallery_rows(test: CuratedTestSet) -> np.ndarray:
    """Sorted gallery rows referenced by non-excluded samples."""
    rows = set()
    for c in test.samples:
        if c.label == "excluded":
            continue
        rows.update(c.sample.gt_rows)
    return np.asarray(sorted(rows), dtype=np.int64)


def restrict_gallery(
    test: CuratedTestSet, gallery: EmbeddingMatrix
) -> tuple[EmbeddingMatrix, dict[int, int]]:
    """Cut the gallery to curated rows; returns (submatrix, old-to-new map)."""
    rows = curated_gallery_rows(test)
    if rows.size == 0:
        raise ManifestError("no non-excluded samples, curated gallery would be empty")
    if rows[-1] >= gallery.rows:
        raise ManifestError(
            f"gt row {int(rows[-1])} out of range for gallery with {gallery.rows} rows"
        )
    sub = EmbeddingMatrix(gallery.data[rows].copy(), normalized=gallery.normalized)
    return sub, {int(old): new for new, old in enumerate(rows)}


def remap_test_rows(test: CuratedTestSet, row_map: dict[int, int]) -> CuratedTestSet:
    """Rewrite gt_rows through row_map (payload rows are left alone)."""
    from dataclasses import replace

    samples = []
    for c in test.samples:
        if c.label == "excluded":
            samples.append(c)
            continue
        s = c.sample
        new_gt = tuple(row_map[g] for g in s.gt_rows)
        samples.append(replace(c, sample=replace(s, gt_rows=new_gt)))
    return CuratedTestSet(samples, dict(test.counts), dict(test.percentages))


def recall_summary(
    outcomes: Sequence[EvalOutcome], ks: Iterable[int] = DEFAULT_KS
) -> dict:
    """Aggregate Recall@k (mean of indicators), overall and per label."""
    ks = _check_ks(ks)
    if not outcomes:
        raise ValueError("outcomes is empty")
    groups: dict[str, list[EvalOutcome]] = {"all": list(outcomes)}
    for o in outcomes:
        groups.setdefault(o.label, []).append(o)
    summary = {}
    for name, group in groups.items():
        summary[name] = {
            "n": len(group),
            "recall": {k: sum(o.y_at_k[k] for o in group) / len(group) for k in ks},
        }
    return summary


def write_outcomes(
    outcomes: Sequence[EvalOutcome], path: str | Path, ks: Iterable[int] = DEFAULT_KS
) -> None:
    ks = _check_ks(ks)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["test_id", "label", "rank"] + [f"y{k}" for k in ks] + ["f_avg", "f_cap"])
        for o in outcomes:
            row = [o.test_id, o.label, "" if o.rank is None else o.rank]
            row += [o.y_at_k[k] for k in ks]
            row += [repr(o.f_avg), o.f_cap]
            writer.writerow(row)


def read_outcomes(path: str | Path) -> tuple[list[EvalOutcome], tuple[int, ...]]:
    """Parse an outcomes CSV; returns (outcomes, ks from the header)."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty outcomes file") from None
        if header[:3] != ["test_id", "label", "rank"] or header[-2:] != ["f_avg", "f_cap"]:
            raise InputError(f"{path}: unexpected outcomes header {header!r}")
        ycols = header[3:-2]
        if not ycols or not all(c.startswith("y") and c[1:].isdigit() for c in ycols):
            raise InputError(f"{path}: unexpected outcomes header {header!r}")
        ks = tuple(int(c[1:]) for c in ycols)
        outcomes = []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(header):
                raise InputError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            try:
                rank = None if row[2] == "" else int(row[2])
                y_at_k = {k: int(v) for k, v in zip(ks, row[3:-2])}
                f_avg = float(row[-2])
                f_cap = int(row[-1])
            except ValueError as exc:
                raise InputError(f"{path}:{lineno}: {exc}") from exc
            if any(v not in (0, 1) for v in y_at_k.values()):
                raise InputError(f"{path}:{lineno}: y columns must be 0/1")
            if not math.isfinite(f_avg) or f_avg <= 0:
                raise InputError(f"{path}:{lineno}: f_avg must be positive")
            outcomes.append(EvalOutcome(row[0], row[1], rank, y_at_k, f_avg, f_cap))
    if not outcomes:
        raise InputError(f"{path}: no outcome rows")
    return outcomes, ks
