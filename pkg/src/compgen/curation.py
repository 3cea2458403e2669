"""Partition retrieval test samples by novelty against a pretraining index.

A test sample keeps the label

* ``known``    if it has at least two concepts, every concept occurs in
  the pretraining corpus, and the full combination co-occurs there;
* ``novel``    if it has at least two concepts, every concept occurs,
  but the combination never co-occurs (co-occurrence frequency 0);
* ``excluded`` otherwise (fewer than two concepts, or an unseen concept).

Concept sets are derived per modality: caption-query (t2i) samples match
the caption text against the vocabulary (the query is text, so no image
gate applies); image-query (i2t) samples match the image's tags.

Manifest rows are JSON lines:

    {"test_id": ..., "modality": "t2i"|"i2t", "caption": ...,
     "tags": [...], "payload_row": int, "gt_rows": [int, ...]}

Curated output mirrors the manifest and adds label, f_cap, concepts and
f_per_concept; a summary JSON carries counts and percentages.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

from .errors import ManifestError
from .index import ConceptIndex
from .ingest import extract_concepts
from .lemmatizer import Lemmatizer, default_lemmatizer, tokenize
from .vocabulary import ConceptVocabulary

LABELS = ("known", "novel", "excluded")

MODALITY_T2I = "t2i"
MODALITY_I2T = "i2t"


@dataclass(frozen=True)
class TestSample:
    test_id: str
    modality: str
    concepts: frozenset[int]
    payload_row: int
    gt_rows: tuple[int, ...]
    caption: str | None = None
    tags: tuple[str, ...] | None = None

    def __post_init__(self):
        if self.modality not in (MODALITY_T2I, MODALITY_I2T):
            raise ManifestError(f"unknown modality {self.modality!r}")
        if not self.gt_rows:
            raise ManifestError(f"sample {self.test_id!r} has no ground-truth rows")


@dataclass(frozen=True)
class CuratedSample:
    sample: TestSample
    label: str
    f_cap: int
    f_per_concept: tuple[int, ...]  # ordered by ascending concept id

    @property
    def concept_ids(self) -> tuple[int, ...]:
        return tuple(sorted(self.sample.concepts))


@dataclass
class CuratedTestSet:
    samples: list[CuratedSample]
    counts: dict[str, int]
    percentages: dict[str, float]

    def by_label(self, label: str) -> list[CuratedSample]:
        return [s for s in self.samples if s.label == label]


def derive_concepts(
    modality: str,
    caption: str | None,
    tags: Iterable[str] | None,
    vocab: ConceptVocabulary,
    lemmatizer: Lemmatizer | None = None,
) -> frozenset[int]:
    lem = lemmatizer or default_lemmatizer()
    if modality == MODALITY_T2I:
        if caption is None:
            raise ManifestError("t2i sample has no caption")
        lemmas = {lem(tok) for tok in tokenize(caption)}
    elif modality == MODALITY_I2T:
        if tags is None:
            raise ManifestError("i2t sample has no tags")
        lemmas = set()
        for tag in tags:
            lemmas.update(lem(tok) for tok in tokenize(tag))
    else:
        raise ManifestError(f"unknown modality {modality!r}")
    return frozenset(vocab.id_of[l] for l in lemmas if l in vocab.id_of)


def classify_sample(sample: TestSample, index: ConceptIndex) -> tuple[str, int]:
    """Label one sample; returns (label, co-occurrence frequency)."""
    label, f_cap, _ = _classify(sample.concepts, index)
    return label, f_cap


def _classify(concepts: frozenset[int], index: ConceptIndex) -> tuple[str, int, tuple[int, ...]]:
    ids = sorted(concepts)
    freqs = tuple(index.frequency(c) for c in ids)
    f_cap = index.cooccurrence_frequency(ids) if ids else 0
    if len(ids) < 2 or any(f == 0 for f in freqs):
        return "excluded", f_cap, freqs
    if f_cap == 0:
        return "novel", f_cap, freqs
    return "known", f_cap, freqs


def curate(samples: Iterable[TestSample], index: ConceptIndex) -> CuratedTestSet:
    """Label every sample, preserving input order."""
    curated = []
    for sample in samples:
        label, f_cap, freqs = _classify(sample.concepts, index)
        curated.append(CuratedSample(sample, label, f_cap, freqs))
    if not curated:
        raise ManifestError("test set is empty")
    counts = {label: 0 for label in LABELS}
    for c in curated:
        counts[c.label] += 1
    total = len(curated)
    percentages = {label: 100.0 * counts[label] / total for label in LABELS}
    return CuratedTestSet(curated, counts, percentages)


def _parse_manifest_obj(
    obj: dict, vocab: ConceptVocabulary, lemmatizer: Lemmatizer | None
) -> TestSample:
    test_id = obj.get("test_id")
    modality = obj.get("modality")
    payload_row = obj.get("payload_row")
    gt_rows = obj.get("gt_rows")
    if not isinstance(test_id, str) or not test_id:
        raise ManifestError("missing or invalid 'test_id'")
    if modality not in (MODALITY_T2I, MODALITY_I2T):
        raise ManifestError(f"invalid 'modality' {modality!r}")
    if not isinstance(payload_row, int) or isinstance(payload_row, bool) or payload_row < 0:
        raise ManifestError("missing or invalid 'payload_row'")
    if (
        not isinstance(gt_rows, list)
        or not gt_rows
        or not all(isinstance(g, int) and not isinstance(g, bool) and g >= 0 for g in gt_rows)
    ):
        raise ManifestError("missing or invalid 'gt_rows'")
    caption = obj.get("caption")
    tags = obj.get("tags")
    if caption is not None and not isinstance(caption, str):
        raise ManifestError("invalid 'caption'")
    if tags is not None and (
        not isinstance(tags, list) or not all(isinstance(t, str) for t in tags)
    ):
        raise ManifestError("invalid 'tags'")
    concepts = derive_concepts(modality, caption, tags, vocab, lemmatizer)
    return TestSample(
        test_id=test_id,
        modality=modality,
        concepts=concepts,
        payload_row=payload_row,
        gt_rows=tuple(gt_rows),
        caption=caption,
        tags=None if tags is None else tuple(tags),
    )


def read_manifest(
    path: str | Path,
    vocab: ConceptVocabulary,
    lemmatizer: Lemmatizer | None = None,
) -> Iterator[TestSample]:
    """Parse a test-set manifest; any malformed line is a hard error."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ManifestError(f"{path}:{lineno}: row is not a JSON object")
            try:
                yield _parse_manifest_obj(obj, vocab, lemmatizer)
            except ManifestError as exc:
                raise ManifestError(f"{path}:{lineno}: {exc}") from exc


def write_manifest(samples: Iterable[TestSample], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for s in samples:
            row = {"test_id": s.test_id, "modality": s.modality}
            if s.caption is not None:
                row["caption"] = s.caption
            if s.tags is not None:
                row["tags"] = list(s.tags)
            row["payload_row"] = s.payload_row
            row["gt_rows"] = list(s.gt_rows)
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
            n += 1
    return n


def write_curated(
    curated: CuratedTestSet, vocab: ConceptVocabulary, path: str | Path
) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for c in curated.samples:
            s = c.sample
            row = {"test_id": s.test_id, "modality": s.modality}
            if s.caption is not None:
                row["caption"] = s.caption
            if s.tags is not None:
                row["tags"] = list(s.tags)
            row["payload_row"] = s.payload_row
            row["gt_rows"] = list(s.gt_rows)
            row["label"] = c.label
            row["f_cap"] = c.f_cap
            row["concepts"] = [vocab.lemma(i) for i in c.concept_ids]
            row["f_per_concept"] = list(c.f_per_concept)
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def read_curated(path: str | Path) -> Iterator[dict]:
    """Yield curated rows as dicts, validating the added fields."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            for key in ("test_id", "modality", "payload_row", "gt_rows", "label", "f_cap", "f_per_concept"):
                if key not in obj:
                    raise ManifestError(f"{path}:{lineno}: missing '{key}'")
            if obj["label"] not in LABELS:
                raise ManifestError(f"{path}:{lineno}: unknown label {obj['label']!r}")
            yield obj


def summary_dict(curated: CuratedTestSet) -> dict:
    return {
        "n_samples": len(curated.samples),
        "counts": dict(curated.counts),
        "percentages": {k: round(v, 4) for k, v in curated.percentages.items()},
    }


def write_summary(curated: CuratedTestSet, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(summary_dict(curated), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
