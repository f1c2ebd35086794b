"""Generalized precision/recall for aspect-based sentiment analysis.

Aspect extraction outputs are matched against gold aspects one-to-one by
thresholded semantic similarity, solved as a linear sum assignment. Supporting
statistics (paired bootstrap, Fleiss' kappa, threshold sweeps) and dataset
converters live alongside.
"""

from aspecteval.model import (
    AnnotatedDocument,
    AspectPolarityPair,
    Polarity,
    PredictionRecord,
    normalize_phrase,
)
from aspecteval.similarity import (
    CharNgramBackend,
    EmbeddingBackend,
    EmbeddingCache,
    ExactBackend,
    OracleBackend,
    scaled_cosine,
)
from aspecteval.assignment import solve_assignment
from aspecteval.matching import DEFAULT_THETA, Match, MatchSet, intersect, non_exact_pairs
from aspecteval.metrics import (
    DocScores,
    EvaluationReport,
    asc_scores,
    exact_match_scores,
    extraction_scores,
    macro_evaluate,
)
from aspecteval.stats import BootstrapResult, SweepRow, fleiss_kappa, paired_bootstrap, theta_sweep
from aspecteval.dataio import convert, load_corpus, load_predictions, parse_llm_annotation

__version__ = "0.1.0"

__all__ = [
    "AnnotatedDocument",
    "AspectPolarityPair",
    "BootstrapResult",
    "CharNgramBackend",
    "DEFAULT_THETA",
    "DocScores",
    "EmbeddingBackend",
    "EmbeddingCache",
    "EvaluationReport",
    "ExactBackend",
    "Match",
    "MatchSet",
    "OracleBackend",
    "Polarity",
    "PredictionRecord",
    "SweepRow",
    "asc_scores",
    "convert",
    "exact_match_scores",
    "extraction_scores",
    "fleiss_kappa",
    "intersect",
    "load_corpus",
    "load_predictions",
    "macro_evaluate",
    "non_exact_pairs",
    "normalize_phrase",
    "paired_bootstrap",
    "parse_llm_annotation",
    "scaled_cosine",
    "solve_assignment",
    "theta_sweep",
]
