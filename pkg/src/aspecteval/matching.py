"""One-to-one thresholded matching between gold and detected aspect sets."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from aspecteval.assignment import solve_assignment
from aspecteval.errors import InvalidThetaError, MatchIndexError
from aspecteval.model import normalize_phrase
from aspecteval.similarity import ExactBackend, SimilarityBackend

DEFAULT_THETA = 0.95


def check_theta(theta) -> float:
    theta = float(theta)
    if not 0.0 <= theta <= 1.0:
        raise InvalidThetaError(f"theta must lie in [0, 1], got {theta}")
    return theta


class Match(NamedTuple):
    gold: int
    detected: int
    similarity: float


@dataclass(frozen=True)
class MatchSet:
    doc_id: str
    pairs: tuple[Match, ...]
    gold_count: int
    detected_count: int
    theta: float = DEFAULT_THETA

    def __len__(self):
        return len(self.pairs)

    @property
    def gold_indices(self) -> set[int]:
        return {m.gold for m in self.pairs}

    @property
    def detected_indices(self) -> set[int]:
        return {m.detected for m in self.pairs}


def as_phrases(items) -> list[str]:
    """Normalized phrases from strings or AspectPolarityPairs; duplicates rejected."""
    phrases = [item.key if hasattr(item, "key") else normalize_phrase(item) for item in items]
    if len(set(phrases)) != len(phrases):
        raise ValueError("aspect set contains duplicate normalized phrases")
    return phrases


def match_similarity_matrix(sim: np.ndarray, theta: float = DEFAULT_THETA, doc_id: str = "") -> MatchSet:
    """Threshold ``sim``, solve the assignment on ``1 - sim`` and keep pairs with sim >= theta.

    The assignment is forced to pair ``min(rows, cols)`` elements, so cells
    zeroed by the threshold can be assigned; those are dropped afterwards.
    """
    theta = check_theta(theta)
    sim = np.asarray(sim, dtype=np.float64)
    n_gold, n_det = sim.shape
    if n_gold == 0 or n_det == 0:
        return MatchSet(doc_id, (), n_gold, n_det, theta)
    kept = np.where(sim >= theta, sim, 0.0)
    pairing = solve_assignment(1.0 - kept)
    pairs = tuple(Match(i, j, float(sim[i, j])) for i, j in pairing if sim[i, j] >= theta)
    return MatchSet(doc_id, pairs, n_gold, n_det, theta)


def intersect(gold, detected, theta: float = DEFAULT_THETA,
              backend: SimilarityBackend | None = None, doc_id: str = "") -> MatchSet:
    """Generalized intersection of a gold and a detected aspect set."""
    backend = backend or ExactBackend()
    gold_phrases = as_phrases(gold)
    det_phrases = as_phrases(detected)
    theta = check_theta(theta)
    if not gold_phrases or not det_phrases:
        return MatchSet(doc_id, (), len(gold_phrases), len(det_phrases), theta)
    return match_similarity_matrix(backend.matrix(gold_phrases, det_phrases), theta, doc_id)


def non_exact_pairs(match: MatchSet, gold, detected) -> list[tuple[str, str]]:
    """Matched (detected, gold) phrase pairs that plain case-insensitive equality would miss."""
    gold_phrases = as_phrases(gold)
    det_phrases = as_phrases(detected)
    if match.gold_count != len(gold_phrases) or match.detected_count != len(det_phrases):
        raise MatchIndexError(
            f"match over {match.gold_count}x{match.detected_count} sets, "
            f"given {len(gold_phrases)}x{len(det_phrases)}"
        )
    out = []
    for m in match.pairs:
        if not (0 <= m.gold < len(gold_phrases) and 0 <= m.detected < len(det_phrases)):
            raise MatchIndexError(f"pair {m} outside the given sets")
        d, g = det_phrases[m.detected], gold_phrases[m.gold]
        if d != g:
            out.append((d, g))
    return out

