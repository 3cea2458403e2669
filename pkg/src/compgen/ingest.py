"""Corpus ingestion: stream annotated samples and build the concept index.

A concept is present in a sample only when its lemma appears among the
lemmatized caption tokens AND among the lemmatized image tags. Corpus
files are JSON lines, one object per line:

    {"id": "...", "caption": "...", "tags": ["...", ...]}

Malformed lines are counted, logged with their line number, and skipped;
duplicate sample ids abort the ingest. Memory stays bounded by the index
itself: records are processed one at a time.

Ingestion can be sharded: build one IndexBuilder per shard and `merge`
them in stream order, which reproduces the single-pass result exactly.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Iterator

from .errors import CorpusError
from .index import ConceptIndex
from .lemmatizer import Lemmatizer, default_lemmatizer, tokenize
from .vocabulary import ConceptVocabulary

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleRecord:
    """One concept-annotated corpus sample."""

    sample_id: str
    caption: str
    image_tags: frozenset[str]
    concepts: frozenset[int]


@dataclass
class IngestStats:
    n_records: int = 0
    n_parse_errors: int = 0
    frequencies: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "n_parse_errors": self.n_parse_errors,
            "vocab_size": len(self.frequencies),
            "n_concept_occurrences": sum(self.frequencies),
            "frequencies": list(self.frequencies),
        }


def extract_concepts(
    caption: str,
    tags: Iterable[str],
    vocab: ConceptVocabulary,
    lemmatizer: Lemmatizer | None = None,
) -> set[int]:
    """Vocabulary ids present in both the caption and the tag set."""
    lem = lemmatizer or default_lemmatizer()
    caption_lemmas = {lem(tok) for tok in tokenize(caption)}
    if not caption_lemmas:
        return set()
    tag_lemmas: set[str] = set()
    for tag in tags:
        tag_lemmas.update(lem(tok) for tok in tokenize(tag))
    matched = caption_lemmas & tag_lemmas
    return {vocab.id_of[lemma] for lemma in matched if lemma in vocab.id_of}


class IndexBuilder:
    """Accumulates postings record by record; immutable index on finalize."""

    def __init__(self, vocab_size: int):
        self.vocab_size = vocab_size
        self._postings: list[list[int]] = [[] for _ in range(vocab_size)]
        self._sample_ids: list[str] = []
        self._seen: set[str] = set()

    @property
    def n_samples(self) -> int:
        return len(self._sample_ids)

    def add(self, sample_id: str, concepts: Iterable[int]) -> int:
        """Append one sample; returns its ordinal."""
        if sample_id in self._seen:
            raise CorpusError(f"duplicate sample id {sample_id!r}")
        ordinal = len(self._sample_ids)
        self._sample_ids.append(sample_id)
        self._seen.add(sample_id)
        for c in set(concepts):
            if not 0 <= c < self.vocab_size:
                raise ValueError(f"concept id {c} out of range")
            self._postings[c].append(ordinal)
        return ordinal

    def merge(self, other: "IndexBuilder") -> "IndexBuilder":
        """Append another shard's samples after this one's, in order."""
        if other.vocab_size != self.vocab_size:
            raise ValueError("cannot merge builders with different vocab sizes")
        overlap = self._seen & other._seen
        if overlap:
            raise CorpusError(f"duplicate sample id {next(iter(overlap))!r} across shards")
        offset = self.n_samples
        for c in range(self.vocab_size):
            self._postings[c].extend(p + offset for p in other._postings[c])
        self._sample_ids.extend(other._sample_ids)
        self._seen.update(other._seen)
        return self

    def build(self) -> ConceptIndex:
        return ConceptIndex(self._postings, self.n_samples, self._sample_ids)


def ingest_records(
    records: Iterable[SampleRecord], vocab: ConceptVocabulary
) -> tuple[ConceptIndex, IngestStats]:
    """Index an already-parsed record stream."""
    builder = IndexBuilder(len(vocab))
    stats = IngestStats()
    for rec in records:
        builder.add(rec.sample_id, rec.concepts)
        stats.n_records += 1
    index = builder.build()
    stats.frequencies = [index.frequency(c) for c in range(index.vocab_size)]
    return index, stats


def parse_corpus_line(
    line: str,
    vocab: ConceptVocabulary,
    lemmatizer: Lemmatizer | None = None,
) -> SampleRecord:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise CorpusError(f"invalid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise CorpusError("record is not a JSON object")
    sample_id = obj.get("id")
    caption = obj.get("caption")
    tags = obj.get("tags")
    if not isinstance(sample_id, str) or not sample_id:
        raise CorpusError("missing or invalid 'id'")
    if not isinstance(caption, str):
        raise CorpusError("missing or invalid 'caption'")
    if not isinstance(tags, list) or not all(isinstance(t, str) for t in tags):
        raise CorpusError("missing or invalid 'tags'")
    concepts = extract_concepts(caption, tags, vocab, lemmatizer)
    return SampleRecord(sample_id, caption, frozenset(tags), frozenset(concepts))


def iter_corpus_file(
    path: str | Path,
    vocab: ConceptVocabulary,
    stats: IngestStats,
    lemmatizer: Lemmatizer | None = None,
) -> Iterator[SampleRecord]:
    """Yield parsed records, skipping and counting malformed lines."""
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            try:
                yield parse_corpus_line(line, vocab, lemmatizer)
            except CorpusError as exc:
                stats.n_parse_errors += 1
                logger.warning("%s:%d: skipping malformed record: %s", path, lineno, exc)


def ingest_corpus(
    path: str | Path,
    vocab: ConceptVocabulary,
    lemmatizer: Lemmatizer | None = None,
) -> tuple[ConceptIndex, IngestStats]:
    """Stream a JSONL corpus file into an index."""
    stats = IngestStats()
    builder = IndexBuilder(len(vocab))
    for rec in iter_corpus_file(path, vocab, stats, lemmatizer):
        builder.add(rec.sample_id, rec.concepts)
        stats.n_records += 1
    index = builder.build()
    stats.frequencies = [index.frequency(c) for c in range(index.vocab_size)]
    return index, stats


def write_corpus(records: Iterable[SampleRecord], path: str | Path) -> int:
    """Write records in the corpus JSONL format; returns the record count."""
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "id": rec.sample_id,
                        "caption": rec.caption,
                        "tags": sorted(rec.image_tags),
                    },
                    ensure_ascii=False,
                    sort_keys=True,
                )
                + "\n"
            )
            n += 1
    return n
