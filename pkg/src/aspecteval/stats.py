"""Significance testing, inter-annotator agreement and threshold sweeps."""

from __future__ import annotations

import warnings
from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from aspecteval.errors import (
    DegenerateAgreementWarning,
    EmptyInputError,
    LengthMismatchError,
    RaggedRatingsError,
)
from aspecteval.matching import check_theta, match_similarity_matrix
from aspecteval.metrics import align_predictions
from aspecteval.model import AnnotatedDocument, PredictionRecord
from aspecteval.similarity import SimilarityBackend

DEFAULT_SEED = 12345
DEFAULT_ITERATIONS = 100_000


# -- paired bootstrap ---------------------------------------------------------


@dataclass(frozen=True)
class BootstrapResult:
    observed_delta: float
    p_value: float
    iterations: int
    seed: int
    metric: str = "f1"

    def significant(self, alpha: float = 0.05) -> bool:
        return self.p_value < alpha

    def to_dict(self) -> dict:
        return {"metric": self.metric, "observed_delta": self.observed_delta,
                "p_value": self.p_value, "iterations": self.iterations, "seed": self.seed}


def _count_exceedances(diffs: np.ndarray, threshold: float, size: int, seed_seq) -> int:
    rng = np.random.Generator(np.random.PCG64(seed_seq))
    idx = rng.integers(0, diffs.size, size=(size, diffs.size))
    return int(np.count_nonzero(diffs[idx].mean(axis=1) >= threshold))


def paired_bootstrap(scores_a: Sequence[float], scores_b: Sequence[float],
                     iterations: int = DEFAULT_ITERATIONS, seed: int = DEFAULT_SEED, *,
                     metric: str = "f1", jobs: int = 1, chunk_size: int = 1000) -> BootstrapResult:
    """Paired bootstrap test that system A beats system B.

    Documents are resampled with replacement; the p-value is the fraction of
    resamples whose mean difference reaches twice the observed one. Each
    chunk of iterations draws from its own child of ``SeedSequence(seed)``,
    so the result does not depend on ``jobs``.
    """
    a = np.asarray(scores_a, dtype=np.float64)
    b = np.asarray(scores_b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise LengthMismatchError(f"score vectors differ in shape: {a.shape} vs {b.shape}")
    if a.size < 2:
        raise EmptyInputError("paired bootstrap needs at least two documents")
    if iterations < 1:
        raise ValueError("iterations must be positive")

    diffs = a - b
    observed = float(diffs.mean())
    sizes = [chunk_size] * (iterations // chunk_size)
    if iterations % chunk_size:
        sizes.append(iterations % chunk_size)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    threshold = 2.0 * observed
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            hits = sum(pool.map(lambda args: _count_exceedances(diffs, threshold, *args),
                                zip(sizes, children)))
    else:
        hits = sum(_count_exceedances(diffs, threshold, n, s) for n, s in zip(sizes, children))
    return BootstrapResult(observed, hits / iterations, iterations, seed, metric)


# -- Fleiss' kappa --------------------------------------------------------------


def fleiss_kappa(table) -> float:
    """Fleiss' kappa for an items x categories matrix of rater counts.

    Every row must sum to the same number of raters (at least 2). When all
    ratings fall in one category the chance agreement is 1 and kappa is
    undefined; 1.0 is returned with a DegenerateAgreementWarning.
    """
    counts = np.asarray(table, dtype=np.float64)
    if counts.ndim != 2 or counts.shape[0] < 1 or counts.shape[1] < 1:
        raise ValueError(f"ratings table must be a non-empty 2-D matrix, got shape {counts.shape}")
    if np.any(counts < 0) or np.any(counts != np.round(counts)):
        raise ValueError("ratings table must hold non-negative integer counts")
    per_item = counts.sum(axis=1)
    n = per_item[0]
    if np.any(per_item != n):
        raise RaggedRatingsError("every item must be rated by the same number of raters")
    if n < 2:
        raise RaggedRatingsError("kappa needs at least two raters per item")
    n_items = counts.shape[0]

    p_item = ((counts ** 2).sum(axis=1) - n) / (n * (n - 1))
    p_bar = p_item.mean()
    p_cat = counts.sum(axis=0) / (n_items * n)
    p_e = float((p_cat ** 2).sum())
    if p_e >= 1.0:
        warnings.warn("all ratings fall in one category; kappa reported as 1",
                      DegenerateAgreementWarning, stacklevel=2)
        return 1.0
    return float((p_bar - p_e) / (1.0 - p_e))


def ratings_table(rows: Iterable[tuple]) -> tuple[np.ndarray, list, list]:
    """Count matrix from (item, rater, label) triples.

    Returns the table plus the item and category orders used for its rows
    and columns.
    """
    seen = set()
    by_item: dict = defaultdict(list)
    for item, rater, label in rows:
        if (item, rater) in seen:
            raise RaggedRatingsError(f"rater {rater!r} rated item {item!r} more than once")
        seen.add((item, rater))
        by_item[item].append(label)
    if not by_item:
        raise EmptyInputError("no ratings given")
    sizes = {len(v) for v in by_item.values()}
    if len(sizes) != 1:
        raise RaggedRatingsError(f"items have differing rater counts: {sorted(sizes)}")
    items = list(by_item)
    categories = sorted({lab for labels in by_item.values() for lab in labels}, key=str)
    col = {c: j for j, c in enumerate(categories)}
    table = np.zeros((len(items), len(categories)), dtype=np.int64)
    for i, item in enumerate(items):
        for lab in by_item[item]:
            table[i, col[lab]] += 1
    return table, items, categories


def bin_scores(values: Sequence[float], edges: Sequence[float] | None = None) -> np.ndarray:
    """Bin continuous scores into ordinal labels.

    ``edges`` are the inner boundaries; bin ``k`` holds values in
    ``[edges[k-1], edges[k])``. Defaults to the sample quartiles, giving four
    labels.
    """
    values = np.asarray(values, dtype=np.float64)
    if edges is None:
        edges = np.quantile(values, [0.25, 0.5, 0.75])
    edges = np.asarray(edges, dtype=np.float64)
    if np.any(np.diff(edges) < 0):
        raise ValueError("bin edges must be non-decreasing")
    return np.digitize(values, edges)


# -- threshold sweep -------------------------------------------------------------


def default_grid(step: float = 0.025) -> list[float]:
    count = int(round(1.0 / step))
    return [round(k * step, 6) for k in range(1, count + 1)]


@dataclass(frozen=True)
class SweepRow:
    theta: float
    matched_pairs: int
    non_exact_pairs: int
    exact_pairs: int
    error_fraction: float | None = None


@dataclass(frozen=True)
class PairRecord:
    theta: float
    system: str
    doc_id: str
    detected: str
    gold: str
    similarity: float


@dataclass
class SweepResult:
    rows: list[SweepRow]
    pairs: list[PairRecord] = field(default_factory=list)


def theta_sweep(corpus: Sequence[AnnotatedDocument],
                systems: Mapping[str, Iterable[PredictionRecord]],
                grid: Sequence[float], backend: SimilarityBackend,
                labels: Mapping[tuple[str, str], bool] | None = None) -> SweepResult:
    """Match every system against the corpus at each threshold in ``grid``.

    For each threshold the row counts all matched pairs, the distinct
    (detected, gold) phrase pairs that differ after normalization, and the
    threshold-independent size of the plain case-insensitive intersections.
    ``labels`` maps normalized (detected, gold) pairs to a reviewer's
    validity verdict; when given, each row reports the fraction of labelled
    non-exact pairs judged invalid.
    """
    grid = [check_theta(t) for t in grid]
    if not grid:
        raise EmptyInputError("theta grid is empty")
    if any(t <= 0.0 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("theta grid must be strictly increasing within (0, 1]")
    if not systems:
        raise EmptyInputError("at least one system is required")

    # similarity matrices are computed once per (system, document) and reused across thresholds
    prepared = []
    exact_total = 0
    for name, preds in systems.items():
        aligned, _ = align_predictions(corpus, preds)
        for doc, pred in zip(corpus, aligned):
            gold_keys, det_keys = doc.gold_phrases, pred.detected_phrases
            exact_total += len(set(gold_keys) & set(det_keys))
            if gold_keys and det_keys:
                sim = backend.matrix(gold_keys, det_keys)
                prepared.append((name, doc, pred, sim))

    rows, dump = [], []
    for theta in grid:
        matched = 0
        found: set[tuple[str, str]] = set()
        for name, doc, pred, sim in prepared:
            match = match_similarity_matrix(sim, theta, doc.id)
            matched += len(match.pairs)
            for m in match.pairs:
                g, d = doc.gold[m.gold], pred.detected[m.detected]
                if g.key != d.key:
                    found.add((d.key, g.key))
                    dump.append(PairRecord(theta, name, doc.id, d.aspect, g.aspect, m.similarity))
        error_fraction = None
        if labels:
            judged = [labels[p] for p in found if p in labels]
            if judged:
                error_fraction = judged.count(False) / len(judged)
        rows.append(SweepRow(theta, matched, len(found), exact_total, error_fraction))

    dump.sort(key=lambda p: (p.theta, p.system, p.doc_id, -p.similarity, p.detected, p.gold))
    return SweepResult(rows, dump)
