import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from compgen import ConceptVocabulary, SampleRecord, ingest_records

# three-document corpus used throughout: ids sorted -> cat=0, dog=1,
# frisbee=2, sofa=3, zebra=4
MINI_VOCAB = ["cat", "dog", "frisbee", "sofa", "zebra"]
CAT, DOG, FRISBEE, SOFA, ZEBRA = range(5)


@pytest.fixture(scope="session")
def mini_vocab():
    return ConceptVocabulary(MINI_VOCAB)


@pytest.fixture(scope="session")
def mini_records():
    return [
        SampleRecord(
            sample_id="d1",
            caption="a dog catches a frisbee",
            image_tags=frozenset({"dog", "frisbee"}),
            concepts=frozenset({DOG, FRISBEE}),
        ),
        SampleRecord(
            sample_id="d2",
            caption="a dog runs",
            image_tags=frozenset({"dog"}),
            concepts=frozenset({DOG}),
        ),
        SampleRecord(
            sample_id="d3",
            caption="a cat sleeps on a sofa",
            image_tags=frozenset({"cat", "sofa"}),
            concepts=frozenset({CAT, SOFA}),
        ),
    ]


@pytest.fixture(scope="session")
def mini_index(mini_records, mini_vocab):
    index, _stats = ingest_records(mini_records, mini_vocab)
    return index


def random_concept_sets(rng: np.random.Generator, n: int, vocab_size: int, max_size: int = 5):
    """Random per-sample concept sets, possibly empty."""
    sets = []
    cap = min(max_size, vocab_size)
    for _ in range(n):
        size = int(rng.integers(0, cap + 1))
        sets.append(set(map(int, rng.choice(vocab_size, size=size, replace=False))))
    return sets


def build_index_from_sets(concept_sets, vocab_size: int):
    from compgen import IndexBuilder

    builder = IndexBuilder(vocab_size)
    for i, concepts in enumerate(concept_sets):
        builder.add(f"s{i:06d}", concepts)
    return builder.build()
