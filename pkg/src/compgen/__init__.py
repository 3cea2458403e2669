"""Corpus-frequency analysis for compositional retrieval benchmarks.

The toolkit ingests concept-annotated corpora into compressed inverted
indexes, partitions retrieval test sets into known, novel, and excluded
combinations by corpus co-occurrence, scores per-sample Recall@k over
dense embeddings, and fits a bootstrapped logistic model of retrieval
success against aggregate concept frequency.  A Zipfian simulator
provides a closed-world oracle for the whole pipeline.
"""

__version__ = "0.1.0"

from .curation import (
    CuratedSample,
    CuratedTestSet,
    TestSample,
    classify_sample,
    curate,
    derive_concepts,
    read_curated,
    read_manifest,
    write_curated,
    write_manifest,
    write_summary,
)
from .embeddings import (
    EmbeddingMatrix,
    deserialize_embeddings,
    is_unit_normalized,
    load_embeddings,
    normalize_rows,
    save_embeddings,
    serialize_embeddings,
)
from .errors import (
    CompgenError,
    CorpusError,
    EmbeddingFormatError,
    FitError,
    IndexFormatError,
    InputError,
    ManifestError,
    VocabularyError,
)
from .index import (
    ConceptIndex,
    deserialize_index,
    load_index,
    save_index,
    serialize_index,
)
from .ingest import (
    IndexBuilder,
    IngestStats,
    SampleRecord,
    extract_concepts,
    ingest_corpus,
    ingest_records,
    write_corpus,
)
from .lemmatizer import Lemmatizer, default_lemmatizer, lemmatize, tokenize
from .predictor import (
    FrequencyLogisticRegression,
    LogisticFit,
    binned_recall,
    fit_logistic,
    iqr_filter,
    predict,
    sample_frequency,
)
from .report import emit_report
from .retrieval import (
    EvalOutcome,
    evaluate,
    rank_of_best_gt,
    read_outcomes,
    recall_summary,
    write_outcomes,
)
from .simulation import (
    SimulationSpec,
    composed_success_probability,
    generate_corpus,
    generate_test_samples,
    simulate_eval_outcomes,
    simulate_outcomes,
    simulation_vocabulary,
)
from .vocabulary import ConceptVocabulary, load_vocabulary, save_vocabulary

__all__ = [
    "__version__",
    "CompgenError",
    "InputError",
    "VocabularyError",
    "CorpusError",
    "ManifestError",
    "IndexFormatError",
    "EmbeddingFormatError",
    "FitError",
    "Lemmatizer",
    "default_lemmatizer",
    "lemmatize",
    "tokenize",
    "ConceptVocabulary",
    "load_vocabulary",
    "save_vocabulary",
    "SampleRecord",
    "IngestStats",
    "IndexBuilder",
    "extract_concepts",
    "ingest_corpus",
    "ingest_records",
    "write_corpus",
    "ConceptIndex",
    "serialize_index",
    "deserialize_index",
    "save_index",
    "load_index",
    "EmbeddingMatrix",
    "serialize_embeddings",
    "deserialize_embeddings",
    "save_embeddings",
    "load_embeddings",
    "normalize_rows",
    "is_unit_normalized",
    "TestSample",
    "CuratedSample",
    "CuratedTestSet",
    "derive_concepts",
    "classify_sample",
    "curate",
    "read_manifest",
    "write_manifest",
    "read_curated",
    "write_curated",
    "write_summary",
    "EvalOutcome",
    "rank_of_best_gt",
    "evaluate",
    "recall_summary",
    "write_outcomes",
    "read_outcomes",
    "sample_frequency",
    "iqr_filter",
    "fit_logistic",
    "predict",
    "binned_recall",
    "LogisticFit",
    "FrequencyLogisticRegression",
    "SimulationSpec",
    "simulation_vocabulary",
    "generate_corpus",
    "generate_test_samples",
    "composed_success_probability",
    "simulate_outcomes",
    "simulate_eval_outcomes",
    "emit_report",
]
