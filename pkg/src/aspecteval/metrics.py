"""Generalized and exact extraction metrics, macro averaging and ASC scoring.

Per-document precision and recall are matched-pair counts over the detected
and gold set sizes. Documents with an empty side are resolved by policy:

=========  =========  =====  =====
 |gold|     |det|       P      R
=========  =========  =====  =====
   0          0         1      1
  > 0         0         0      0
   0         > 0        0      0
=========  =========  =====  =====

Corpus figures are arithmetic means of per-document values. Macro F1 is the
mean of per-document F1; the harmonic mean of macro P and macro R is reported
next to it as ``f1_harmonic``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

from aspecteval.errors import DuplicateDocIdError, EmptyInputError, UnknownDocIdError
from aspecteval.matching import DEFAULT_THETA, MatchSet, check_theta, intersect
from aspecteval.model import (
    SCORING_CLASSES,
    STRICT_SCORING_CLASSES,
    AnnotatedDocument,
    AspectPolarityPair,
    PredictionRecord,
)
from aspecteval.similarity import ExactBackend, SimilarityBackend


@dataclass(frozen=True)
class DocScores:
    doc_id: str
    p: float
    r: float
    f1: float
    matched: int
    gold_count: int
    detected_count: int


def f1_score(p: float, r: float) -> float:
    return 2.0 * p * r / (p + r) if p + r > 0 else 0.0


def counts_to_scores(doc_id: str, matched: int, gold_count: int, detected_count: int) -> DocScores:
    if gold_count == 0 and detected_count == 0:
        return DocScores(doc_id, 1.0, 1.0, 1.0, 0, 0, 0)
    p = matched / detected_count if detected_count else 0.0
    r = matched / gold_count if gold_count else 0.0
    # 2m / (|S_g| + |S_d|) is the harmonic mean of p and r with a single rounding
    f1 = 2 * matched / (gold_count + detected_count)
    return DocScores(doc_id, p, r, f1, matched, gold_count, detected_count)


def extraction_scores(match: MatchSet) -> DocScores:
    return counts_to_scores(match.doc_id, len(match.pairs), match.gold_count, match.detected_count)


def exact_match_scores(gold: Sequence[AspectPolarityPair], detected: Sequence[AspectPolarityPair],
                       doc_id: str = "") -> DocScores:
    """Baseline scores from a plain case-insensitive set intersection."""
    gold_keys = {p.key for p in gold}
    det_keys = {p.key for p in detected}
    return counts_to_scores(doc_id, len(gold_keys & det_keys), len(gold_keys), len(det_keys))


def _mean(values: Iterable[float]) -> float:
    values = list(values)
    return math.fsum(values) / len(values)


def macro_average(scores: Sequence[DocScores]) -> dict[str, float]:
    if not scores:
        raise EmptyInputError("cannot average over zero documents")
    p = _mean(s.p for s in scores)
    r = _mean(s.r for s in scores)
    return {"p": p, "r": r, "f1": _mean(s.f1 for s in scores), "f1_harmonic": f1_score(p, r)}


# -- aspect sentiment classification ------------------------------------------


@dataclass
class ClassCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0

    def __iadd__(self, other):
        self.tp += other.tp
        self.fp += other.fp
        self.fn += other.fn
        return self

    @property
    def has_support(self) -> bool:
        return self.tp + self.fp + self.fn > 0

    def scores(self) -> dict[str, float]:
        p = self.tp / (self.tp + self.fp) if self.tp + self.fp else 0.0
        r = self.tp / (self.tp + self.fn) if self.tp + self.fn else 0.0
        f1 = 2 * self.tp / (2 * self.tp + self.fp + self.fn) if self.tp else 0.0
        return {"p": p, "r": r, "f1": f1}


def asc_confusion(match: MatchSet, gold: Sequence[AspectPolarityPair],
                  detected: Sequence[AspectPolarityPair], strict: bool = False) -> dict[str, ClassCounts]:
    """Per-class TP/FP/FN for polarity assignment, conditional on aspect matching.

    A matched pair with agreeing polarity is a TP of that class; with
    disagreeing polarity it is an FN of the gold class and an FP of the
    predicted class. Unmatched gold aspects are FNs and unmatched detections
    FPs of their own classes, so missed aspects depress recall.
    """
    classes = STRICT_SCORING_CLASSES if strict else SCORING_CLASSES
    counts = {c.value: ClassCounts() for c in classes}
    for m in match.pairs:
        g = gold[m.gold].polarity.for_scoring(strict).value
        d = detected[m.detected].polarity.for_scoring(strict).value
        if g == d:
            counts[g].tp += 1
        else:
            counts[g].fn += 1
            counts[d].fp += 1
    for i in set(range(len(gold))) - match.gold_indices:
        counts[gold[i].polarity.for_scoring(strict).value].fn += 1
    for j in set(range(len(detected))) - match.detected_indices:
        counts[detected[j].polarity.for_scoring(strict).value].fp += 1
    return counts


def _class_macro(counts: dict[str, ClassCounts]) -> dict[str, float]:
    supported = [c.scores() for c in counts.values() if c.has_support]
    if not supported:
        return {"p": 1.0, "r": 1.0, "f1": 1.0}
    return {k: _mean(s[k] for s in supported) for k in ("p", "r", "f1")}


@dataclass
class AscReport:
    per_doc: list[dict]
    per_class: dict[str, dict]
    class_macro: dict[str, float]
    macro: dict[str, float]

    def to_dict(self):
        return {"macro": self.macro, "class_macro": self.class_macro,
                "per_class": self.per_class, "per_doc": self.per_doc}


def asc_scores(matches: Sequence[MatchSet], gold: Sequence[AnnotatedDocument],
               predictions: Sequence[PredictionRecord], strict: bool = False) -> AscReport:
    """ASC metrics for aligned per-document matches, gold documents and predictions.

    ``macro`` averages per-document scores (each the mean over classes present
    in the document) the same way extraction metrics are averaged.
    ``per_class`` and ``class_macro`` are computed from corpus-summed counts.
    """
    if not (len(matches) == len(gold) == len(predictions)):
        raise ValueError("matches, gold and predictions must be aligned by document")
    if not matches:
        raise EmptyInputError("cannot score zero documents")
    totals: dict[str, ClassCounts] = {}
    per_doc = []
    for match, doc, pred in zip(matches, gold, predictions):
        counts = asc_confusion(match, doc.gold, pred.detected, strict)
        for cls, c in counts.items():
            totals.setdefault(cls, ClassCounts())
            totals[cls] += c
        per_doc.append({"doc_id": doc.id, **_class_macro(counts),
                        "counts": {cls: asdict(c) for cls, c in counts.items()}})
    per_class = {cls: {**asdict(c), **c.scores()} for cls, c in totals.items()}
    macro = {k: _mean(d[k] for d in per_doc) for k in ("p", "r", "f1")}
    return AscReport(per_doc, per_class, _class_macro(totals), macro)


# -- corpus evaluation ----------------------------------------------------------


@dataclass
class EvaluationReport:
    theta: float
    backend: str
    generalized: list[DocScores]
    exact: list[DocScores]
    macro_generalized: dict[str, float]
    macro_exact: dict[str, float]
    asc: AscReport
    matches: list[MatchSet] = field(repr=False, default_factory=list)
    missing_predictions: list[str] = field(default_factory=list)

    def to_dict(self, gold: Sequence[AnnotatedDocument] | None = None,
                predictions: Sequence[PredictionRecord] | None = None) -> dict:
        """JSON-ready dict; phrase text is included for matched pairs when inputs are given."""
        docs = []
        for k, (gen, ex, match) in enumerate(zip(self.generalized, self.exact, self.matches)):
            pairs = []
            for m in match.pairs:
                entry = {"gold_index": m.gold, "detected_index": m.detected, "similarity": m.similarity}
                if gold is not None and predictions is not None:
                    entry["gold"] = gold[k].gold[m.gold].aspect
                    entry["detected"] = predictions[k].detected[m.detected].aspect
                pairs.append(entry)
            docs.append({"doc_id": gen.doc_id, "generalized": _score_fields(gen),
                         "exact": _score_fields(ex), "matches": pairs})
        warnings = [f"no prediction for document {d!r}; scored as empty" for d in self.missing_predictions]
        return {
            "theta": self.theta,
            "backend": self.backend,
            "documents_evaluated": len(self.generalized),
            "macro": {"generalized": self.macro_generalized, "exact": self.macro_exact},
            "asc": {k: v for k, v in self.asc.to_dict().items() if k != "per_doc"},
            "warnings": warnings,
            "documents": docs,
        }

    def per_document_rows(self) -> list[dict]:
        rows = []
        for gen, ex, asc in zip(self.generalized, self.exact, self.asc.per_doc):
            rows.append({
                "doc_id": gen.doc_id, "gold_count": gen.gold_count, "detected_count": gen.detected_count,
                "matched": gen.matched, "p": gen.p, "r": gen.r, "f1": gen.f1,
                "exact_matched": ex.matched, "exact_p": ex.p, "exact_r": ex.r, "exact_f1": ex.f1,
                "asc_p": asc["p"], "asc_r": asc["r"], "asc_f1": asc["f1"],
            })
        return rows


def _score_fields(s: DocScores) -> dict:
    return {"p": s.p, "r": s.r, "f1": s.f1, "matched": s.matched,
            "gold_count": s.gold_count, "detected_count": s.detected_count}


def align_predictions(corpus: Sequence[AnnotatedDocument],
                      predictions: Iterable[PredictionRecord]) -> tuple[list[PredictionRecord], list[str]]:
    """Predictions in corpus order; absent documents get an empty record.

    Returns the aligned list and the ids that had no prediction.
    """
    known = {doc.id for doc in corpus}
    by_id: dict[str, PredictionRecord] = {}
    for pred in predictions:
        if pred.doc_id not in known:
            raise UnknownDocIdError(f"prediction for unknown document {pred.doc_id!r}")
        if pred.doc_id in by_id:
            raise DuplicateDocIdError(f"two predictions for document {pred.doc_id!r}")
        by_id[pred.doc_id] = pred
    missing = [doc.id for doc in corpus if doc.id not in by_id]
    aligned = [by_id.get(doc.id) or PredictionRecord(doc.id, ()) for doc in corpus]
    return aligned, missing


def macro_evaluate(corpus: Sequence[AnnotatedDocument], predictions: Iterable[PredictionRecord],
                   theta: float = DEFAULT_THETA, backend: SimilarityBackend | None = None,
                   strict_polarity: bool = False) -> EvaluationReport:
    """Score a system against a gold corpus at threshold ``theta``."""
    theta = check_theta(theta)
    backend = backend or ExactBackend()
    if not corpus:
        raise EmptyInputError("gold corpus is empty")
    aligned, missing = align_predictions(corpus, predictions)
    matches, generalized, exact = [], [], []
    for doc, pred in zip(corpus, aligned):
        match = intersect(doc.gold, pred.detected, theta, backend, doc.id)
        matches.append(match)
        generalized.append(extraction_scores(match))
        exact.append(exact_match_scores(doc.gold, pred.detected, doc.id))
    return EvaluationReport(
        theta=theta,
        backend=backend.id,
        generalized=generalized,
        exact=exact,
        macro_generalized=macro_average(generalized),
        macro_exact=macro_average(exact),
        asc=asc_scores(matches, corpus, aligned, strict_polarity),
        matches=matches,
        missing_predictions=missing,
    )
