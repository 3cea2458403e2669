"""Rule-based English noun lemmatization and caption tokenization.

The lemmatizer maps plural surface forms to singular lemmas with a small
set of suffix rules (-ies, -es after sibilants, -oes, plain -s) plus a
shipped exception table for irregular nouns and for words the rules would
mangle. Unknown words pass through lowercased. The mapping is
deterministic and idempotent: every output is a fixed point.

Tokenization splits captions on Unicode whitespace after replacing ASCII
punctuation with spaces, so possessives and hyphenated compounds fall
apart into plain word tokens.
"""

from __future__ import annotations

import string
from importlib import resources
from pathlib import Path

from .errors import InputError

_PUNCT_TO_SPACE = str.maketrans({c: " " for c in string.punctuation})

# Suffixes whose -es plural strips cleanly back to the stem.
_ES_STEMS = ("ss", "sh", "ch", "x")


def tokenize(text: str) -> list[str]:
    """Split text into lowercase word tokens, discarding ASCII punctuation."""
    return text.lower().translate(_PUNCT_TO_SPACE).split()


def load_exception_table(path: str | Path) -> dict[str, str]:
    """Read a two-column tab-separated (surface form, lemma) table.

    Blank lines and '#' comment lines are ignored.
    """
    table: dict[str, str] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2 or not parts[0] or not parts[1]:
                raise InputError(
                    f"{path}:{lineno}: expected two tab-separated columns, got {line!r}"
                )
            table[parts[0].lower()] = parts[1].lower()
    return table


class Lemmatizer:
    """Deterministic singular-noun normalizer."""

    def __init__(self, exceptions: dict[str, str] | None = None):
        if exceptions is None:
            exceptions = _default_exceptions()
        self.exceptions = dict(exceptions)

    def __call__(self, token: str) -> str:
        return self.lemmatize(token)

    def lemmatize(self, token: str) -> str:
        w = token.lower()
        hit = self.exceptions.get(w)
        if hit is not None:
            return hit
        if len(w) >= 5 and w.endswith("ies"):
            return w[:-3] + "y"
        if len(w) >= 5 and w.endswith("es") and w[:-2].endswith(_ES_STEMS):
            return w[:-2]
        if len(w) >= 5 and w.endswith("oes"):
            return w[:-2]
        # Plain -s strip; never after -ss/-us/-is, never on very short words.
        if len(w) >= 4 and w.endswith("s") and not w.endswith(("ss", "us", "is")):
            return w[:-1]
        return w


_DEFAULT_EXCEPTIONS: dict[str, str] | None = None


def _default_exceptions() -> dict[str, str]:
    global _DEFAULT_EXCEPTIONS
    if _DEFAULT_EXCEPTIONS is None:
        ref = resources.files("compgen").joinpath("data/irregular_nouns.tsv")
        with resources.as_file(ref) as path:
            _DEFAULT_EXCEPTIONS = load_exception_table(path)
    return _DEFAULT_EXCEPTIONS


_DEFAULT_LEMMATIZER: Lemmatizer | None = None


def default_lemmatizer() -> Lemmatizer:
    global _DEFAULT_LEMMATIZER
    if _DEFAULT_LEMMATIZER is None:
        _DEFAULT_LEMMATIZER = Lemmatizer()
    return _DEFAULT_LEMMATIZER


def lemmatize(token: str) -> str:
    """Lemmatize a single whitespace-free word with the shipped rules."""
    return default_lemmatizer().lemmatize(token)
