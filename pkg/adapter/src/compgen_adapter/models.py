"""Text embedding backends behind a tiny encode() interface.

Two families are understood:

    hashproj:<dim>   signed feature hashing of word tokens, offline and
                     fully deterministic; the testing/CI workhorse
    st:<name>        a sentence-transformers checkpoint, for real runs

A backend exposes .dim and .encode(texts) -> (n, dim) float32; rows are
not normalized here, the exporter handles that.
"""

from __future__ import annotations

import hashlib
import re

import numpy as np

from .errors import ModelError

_TOKEN = re.compile(r"[a-z0-9]+")


class HashProjectionModel:
    def __init__(self, dim: int, device: str = "cpu"):
        if dim < 1:
            raise ModelError("hashproj dimension must be >= 1")
        self.dim = dim

    def encode(self, texts: list[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float32)
        for i, text in enumerate(texts):
            tokens = _TOKEN.findall(text.lower())
            if not tokens:
                raise ModelError(f"no tokens to embed in {text!r}")
            for tok in tokens:
                digest = hashlib.blake2b(tok.encode("utf-8"), digest_size=9).digest()
                bucket = int.from_bytes(digest[:8], "little") % self.dim
                sign = 1.0 if digest[8] & 1 else -1.0
                out[i, bucket] += sign
            if not out[i].any():  # opposite-sign collisions canceled everything
                fallback = int.from_bytes(
                    hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest(), "little"
                )
                out[i, fallback % self.dim] = 1.0
        return out


class SentenceTransformerModel:
    def __init__(self, name: str, device: str = "cpu"):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise ModelError(
                f"cannot resolve model 'st:{name}': sentence-transformers is not installed"
            ) from exc
        try:
            self._model = SentenceTransformer(name, device=device)
        except Exception as exc:
            raise ModelError(f"cannot resolve model 'st:{name}': {exc}") from exc
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: list[str]) -> np.ndarray:
        emb = self._model.encode(texts, convert_to_numpy=True, normalize_embeddings=False)
        return np.asarray(emb, dtype=np.float32)


def resolve_model(name: str, device: str = "cpu"):
    family, sep, arg = name.partition(":")
    if not sep or not arg:
        raise ModelError(
            f"invalid model identifier {name!r}: expected 'hashproj:<dim>' or 'st:<name>'"
        )
    if family == "hashproj":
        try:
            dim = int(arg)
        except ValueError:
            raise ModelError(f"invalid hashproj dimension {arg!r}") from None
        return HashProjectionModel(dim, device)
    if family == "st":
        return SentenceTransformerModel(arg, device)
    raise ModelError(f"unknown model family {family!r}: expected 'hashproj' or 'st'")
