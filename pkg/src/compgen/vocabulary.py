"""Concept vocabulary: the fixed list of object-class lemmas.

Each lemma gets a dense integer id in file order. The on-disk form is a
plain text file, one lemma per line, with '#' comment lines ignored;
round-tripping preserves ids.
"""

from __future__ import annotations

import logging
from pathlib import Path
from typing import Iterable

from .errors import VocabularyError
from .lemmatizer import Lemmatizer, default_lemmatizer

logger = logging.getLogger(__name__)


class ConceptVocabulary:
    """Ordered, validated list of single-token lowercase lemmas."""

    def __init__(self, entries: Iterable[str]):
        self.entries: list[str] = list(entries)
        if not self.entries:
            raise VocabularyError("vocabulary is empty")
        self.id_of: dict[str, int] = {}
        for i, lemma in enumerate(self.entries):
            if not lemma:
                raise VocabularyError(f"entry {i} is empty")
            if lemma != lemma.lower():
                raise VocabularyError(f"entry {i} ({lemma!r}) is not lowercase")
            if len(lemma.split()) != 1:
                raise VocabularyError(
                    f"entry {i} ({lemma!r}) is not a single token; "
                    "multi-word concepts are unsupported"
                )
            if lemma in self.id_of:
                raise VocabularyError(f"duplicate entry {lemma!r}")
            self.id_of[lemma] = i

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, lemma: str) -> bool:
        return lemma in self.id_of

    def lemma(self, concept_id: int) -> str:
        return self.entries[concept_id]

    def warn_unstable_entries(self, lemmatizer: Lemmatizer | None = None) -> list[str]:
        """Report entries that are not lemmatizer fixed points.

        Captions are matched after lemmatization, so such entries can
        never match and usually indicate a vocabulary built with
        different normalization rules.
        """
        lem = lemmatizer or default_lemmatizer()
        unstable = [e for e in self.entries if lem(e) != e]
        for e in unstable:
            logger.warning("vocabulary entry %r lemmatizes to %r and cannot match", e, lem(e))
        return unstable


def load_vocabulary(path: str | Path) -> ConceptVocabulary:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            entries.append(line)
    if not entries:
        raise VocabularyError(f"{path}: no vocabulary entries found")
    return ConceptVocabulary(entries)


def save_vocabulary(vocab: ConceptVocabulary, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for lemma in vocab.entries:
            fh.write(lemma + "\n")
