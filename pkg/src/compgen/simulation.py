"""Closed-world synthetic corpora for exercising the whole pipeline.

Concepts are ranked 0..V-1 with Zipf weights rank^(-s); each corpus
record draws its concept set without replacement from that law.
Captions are the space-joined concept lemmas and the tags equal the
concept set, so ingesting the written corpus reconstructs the drawn
sets exactly.

Retrieval is simulated by the multiplicative model: a test sample
succeeds with probability prod over its concepts of
sigma(a + b*log10 f(o)), where f(o) is the concept's corpus frequency.
Everything is deterministic given the spec's seed; per-record streams
are derived as default_rng([seed, stream, index]) so generation can be
partitioned without changing output.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy.special import expit

from .curation import MODALITY_T2I, CuratedTestSet, TestSample
from .errors import InputError
from .index import ConceptIndex
from .ingest import SampleRecord
from .predictor import sample_frequency
from .retrieval import EvalOutcome
from .vocabulary import ConceptVocabulary

# stream tags for derived rng seeds
_STREAM_CORPUS = 0
_STREAM_OUTCOME = 1
_STREAM_TEST = 2
_STREAM_EMBED = 3

TEST_DISTRIBUTIONS = ("loguniform", "uniform", "zipf")


@dataclass(frozen=True)
class EmbeddingSpec:
    dim: int = 0  # 0 disables embedding output
    noise: float = 0.1

    def __post_init__(self):
        if self.dim < 0:
            raise InputError("embeddings.dim must be >= 0")
        if self.noise < 0:
            raise InputError("embeddings.noise must be >= 0")


@dataclass(frozen=True)
class TestSetSpec:
    n: int = 0
    objects_min: int = 2
    objects_max: int = 2
    distribution: str = "loguniform"

    def __post_init__(self):
        if self.n < 0:
            raise InputError("test_set.n must be >= 0")
        if not 1 <= self.objects_min <= self.objects_max:
            raise InputError("test_set objects_per_sample range is invalid")
        if self.distribution not in TEST_DISTRIBUTIONS:
            raise InputError(
                f"test_set.distribution must be one of {TEST_DISTRIBUTIONS}, "
                f"got {self.distribution!r}"
            )


@dataclass(frozen=True)
class SimulationSpec:
    V: int
    N: int
    zipf_s: float
    objects_min: int
    objects_max: int
    seed: int
    a: float
    b: float
    test_set: TestSetSpec = TestSetSpec()
    embeddings: EmbeddingSpec = EmbeddingSpec()

    def __post_init__(self):
        if self.V < 2:
            raise InputError("V must be >= 2")
        if self.N < 0:
            raise InputError("N must be >= 0")
        if self.zipf_s <= 0:
            raise InputError("zipf_s must be > 0")
        if not 1 <= self.objects_min <= self.objects_max <= self.V:
            raise InputError("objects_per_sample range must satisfy 1 <= min <= max <= V")
        if self.test_set.objects_max > self.V:
            raise InputError("test_set objects_per_sample exceeds V")


def spec_from_dict(obj: dict) -> SimulationSpec:
    try:
        rng_pair = obj.get("objects_per_sample", [1, 4])
        a, b = obj["per_object_success"]
        ts = obj.get("test_set") or {}
        ts_pair = ts.get("objects_per_sample", [2, 2])
        test_set = TestSetSpec(
            n=int(ts.get("n", 0)),
            objects_min=int(ts_pair[0]),
            objects_max=int(ts_pair[1]),
            distribution=str(ts.get("distribution", "loguniform")),
        )
        emb = obj.get("embeddings") or {}
        embeddings = EmbeddingSpec(
            dim=int(emb.get("dim", 0)), noise=float(emb.get("noise", 0.1))
        )
        return SimulationSpec(
            V=int(obj["V"]),
            N=int(obj["N"]),
            zipf_s=float(obj.get("zipf_s", 1.0)),
            objects_min=int(rng_pair[0]),
            objects_max=int(rng_pair[1]),
            seed=int(obj.get("seed", 0)),
            a=float(a),
            b=float(b),
            test_set=test_set,
            embeddings=embeddings,
        )
    except (KeyError, TypeError, ValueError, IndexError) as exc:
        raise InputError(f"invalid simulation spec: {exc}") from exc


def spec_to_dict(spec: SimulationSpec) -> dict:
    return {
        "V": spec.V,
        "N": spec.N,
        "zipf_s": spec.zipf_s,
        "objects_per_sample": [spec.objects_min, spec.objects_max],
        "seed": spec.seed,
        "per_object_success": [spec.a, spec.b],
        "test_set": {
            "n": spec.test_set.n,
            "objects_per_sample": [spec.test_set.objects_min, spec.test_set.objects_max],
            "distribution": spec.test_set.distribution,
        },
        "embeddings": {"dim": spec.embeddings.dim, "noise": spec.embeddings.noise},
    }


def load_spec(path: str | Path) -> SimulationSpec:
    try:
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read simulation spec {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise InputError(f"{path}: simulation spec must be a JSON object")
    return spec_from_dict(obj)


def concept_lemma(rank: int) -> str:
    return f"c{rank:04d}"


def simulation_vocabulary(spec: SimulationSpec) -> ConceptVocabulary:
    return ConceptVocabulary([concept_lemma(r) for r in range(spec.V)])


def _zipf_cdf(V: int, s: float) -> np.ndarray:
    weights = np.arange(1, V + 1, dtype=np.float64) ** (-s)
    cdf = np.cumsum(weights)
    cdf /= cdf[-1]
    return cdf


def _draw_distinct(rng: np.random.Generator, cdf: np.ndarray, n: int) -> list[int]:
    # without-replacement via redraw; n is tiny relative to V in practice
    chosen: list[int] = []
    seen = set()
    while len(chosen) < n:
        r = int(np.searchsorted(cdf, rng.random(), side="right"))
        if r not in seen:
            seen.add(r)
            chosen.append(r)
    return chosen


def generate_corpus(spec: SimulationSpec) -> Iterator[SampleRecord]:
    """Yield N synthetic records, deterministically derived from the seed."""
    cdf = _zipf_cdf(spec.V, spec.zipf_s)
    for i in range(spec.N):
        rng = np.random.default_rng([spec.seed, _STREAM_CORPUS, i])
        n_obj = int(rng.integers(spec.objects_min, spec.objects_max + 1))
        ranks = _draw_distinct(rng, cdf, n_obj)
        lemmas = [concept_lemma(r) for r in ranks]
        yield SampleRecord(
            sample_id=f"s{i:08d}",
            caption=" ".join(lemmas),
            image_tags=frozenset(lemmas),
            concepts=frozenset(ranks),
        )


def composed_success_probability(
    concepts: Iterable[int], index: ConceptIndex, a: float, b: float
) -> float:
    """Product over concepts of sigma(a + b*log10 f(o))."""
    ids = sorted(concepts)
    if not ids:
        raise ValueError("concepts is empty")
    freqs = np.asarray(index.frequencies(ids), dtype=np.float64)
    if np.any(freqs == 0):
        zero = [c for c, f in zip(ids, freqs) if f == 0]
        raise ValueError(f"concepts {zero} have zero corpus frequency")
    factors = expit(a + b * np.log10(freqs))
    return float(np.prod(factors))


def _draw_test_ranks(
    rng: np.random.Generator,
    eligible: np.ndarray,
    cdf_eligible: np.ndarray,
    n: int,
    distribution: str,
) -> list[int]:
    m = eligible.size
    chosen: list[int] = []
    seen = set()
    while len(chosen) < n:
        if distribution == "uniform":
            pos = int(rng.integers(0, m))
        elif distribution == "zipf":
            pos = int(np.searchsorted(cdf_eligible, rng.random(), side="right"))
        else:  # loguniform over rank: spreads log-frequency roughly evenly
            r = math.exp(rng.uniform(0.0, math.log(m + 1)))
            pos = min(int(r) - 1, m - 1)
        rank = int(eligible[pos])
        if rank not in seen:
            seen.add(rank)
            chosen.append(rank)
    return chosen


def generate_test_samples(spec: SimulationSpec, index: ConceptIndex) -> list[TestSample]:
    """Draw test combinations over concepts with positive corpus frequency.

    Sample j uses payload row j and ground-truth row j, so self-retrieval
    style embedding checks stay possible; outcome simulation does not
    need the rows.
    """
    ts = spec.test_set
    if ts.n == 0:
        return []
    freqs = np.asarray([index.frequency(c) for c in range(spec.V)], dtype=np.int64)
    eligible = np.flatnonzero(freqs > 0)
    if eligible.size < ts.objects_max:
        raise InputError(
            f"only {eligible.size} concepts have positive frequency, "
            f"test samples need up to {ts.objects_max}"
        )
    weights = (eligible + 1).astype(np.float64) ** (-spec.zipf_s)
    cdf_eligible = np.cumsum(weights)
    cdf_eligible /= cdf_eligible[-1]
    samples = []
    for j in range(ts.n):
        rng = np.random.default_rng([spec.seed, _STREAM_TEST, j])
        n_obj = int(rng.integers(ts.objects_min, ts.objects_max + 1))
        ranks = _draw_test_ranks(rng, eligible, cdf_eligible, n_obj, ts.distribution)
        lemmas = [concept_lemma(r) for r in sorted(ranks)]
        samples.append(
            TestSample(
                test_id=f"t{j:06d}",
                modality=MODALITY_T2I,
                concepts=frozenset(ranks),
                payload_row=j,
                gt_rows=(j,),
                caption=" ".join(lemmas),
                tags=tuple(lemmas),
            )
        )
    return samples


def simulate_outcomes(
    spec: SimulationSpec,
    test_samples: Sequence[TestSample],
    index: ConceptIndex,
) -> list[tuple[int, float]]:
    """Bernoulli outcome and aggregate frequency per test sample."""
    out = []
    for j, sample in enumerate(test_samples):
        y, f_avg = _draw_outcome(spec, sample.concepts, j, index)
        out.append((y, f_avg))
    return out


def _draw_outcome(
    spec: SimulationSpec, concepts: frozenset[int], j: int, index: ConceptIndex
) -> tuple[int, float]:
    p = composed_success_probability(concepts, index, spec.a, spec.b)
    rng = np.random.default_rng([spec.seed, _STREAM_OUTCOME, j])
    y = int(rng.random() < p)
    f_avg = sample_frequency(index.frequencies(sorted(concepts)))
    return y, f_avg


def simulate_eval_outcomes(
    spec: SimulationSpec,
    curated: CuratedTestSet,
    index: ConceptIndex,
    ks: Iterable[int] = (1, 5, 10),
) -> list[EvalOutcome]:
    """Outcome rows for non-excluded curated samples, no ranking stage.

    The simulated y stands in for every Recall@k indicator and the rank
    column stays empty.  Seed position follows the curated list, so a
    sample's draw does not depend on how its neighbors were labeled.
    """
    ks = tuple(sorted(set(int(k) for k in ks)))
    outcomes = []
    for j, c in enumerate(curated.samples):
        if c.label == "excluded":
            continue
        y, f_avg = _draw_outcome(spec, c.sample.concepts, j, index)
        outcomes.append(
            EvalOutcome(
                test_id=c.sample.test_id,
                label=c.label,
                rank=None,
                y_at_k={k: y for k in ks},
                f_avg=f_avg,
                f_cap=c.f_cap,
            )
        )
    return outcomes


def generate_embeddings(spec: SimulationSpec, n_rows: int):
    """Synthetic query/gallery matrices for exercising the ranking stage.

    Gallery rows are random unit vectors; query j is its gallery row
    plus Gaussian noise, re-normalized, so self-retrieval mostly wins
    while leaving room for rank errors.  Returns (queries, gallery).
    """
    from .embeddings import EmbeddingMatrix, normalize_rows

    dim = spec.embeddings.dim
    if dim <= 0:
        raise InputError("embeddings.dim must be positive to generate embeddings")
    gallery = np.empty((n_rows, dim), dtype=np.float64)
    noise = np.empty((n_rows, dim), dtype=np.float64)
    for j in range(n_rows):
        rng = np.random.default_rng([spec.seed, _STREAM_EMBED, j])
        gallery[j] = rng.standard_normal(dim)
        noise[j] = rng.standard_normal(dim)
    queries = gallery + spec.embeddings.noise * noise
    g = normalize_rows(EmbeddingMatrix(gallery.astype(np.float32)))
    q = normalize_rows(EmbeddingMatrix(queries.astype(np.float32)))
    return q, g
