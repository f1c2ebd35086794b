from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aspecteval.errors import DuplicateDocIdError, EmptyInputError, UnknownDocIdError
from aspecteval.matching import intersect
from aspecteval.metrics import (
    asc_confusion,
    counts_to_scores,
    exact_match_scores,
    extraction_scores,
    macro_average,
    macro_evaluate,
)
from aspecteval.model import AnnotatedDocument, AspectPolarityPair, PredictionRecord
from aspecteval.similarity import CharNgramBackend, ExactBackend


def pairs(*aspects, polarity="positive"):
    return tuple(AspectPolarityPair(a, polarity) for a in aspects)


# (gold, detected, p, r, f1) worked by hand
TEN_DOCS = [
    ("abc", "abc", 1, 1, 1),
    ("ab", "a", 1, Fraction(1, 2), Fraction(2, 3)),
    ("a", "abcd", Fraction(1, 4), 1, Fraction(2, 5)),
    ("", "", 1, 1, 1),
    ("a", "", 0, 0, 0),
    ("", "x", 0, 0, 0),
    ("abcd", "be", Fraction(1, 2), Fraction(1, 4), Fraction(1, 3)),
    ("xy", "zw", 0, 0, 0),
    (["Food"], [" food ", "service"], Fraction(1, 2), 1, Fraction(2, 3)),
    ("abc", "cbade", Fraction(3, 5), 1, Fraction(3, 4)),
]


def ten_doc_corpus():
    corpus = [AnnotatedDocument(f"d{k}", "", pairs(*g)) for k, (g, *_rest) in enumerate(TEN_DOCS)]
    preds = [PredictionRecord(f"d{k}", pairs(*d)) for k, (_g, d, *_rest) in enumerate(TEN_DOCS)]
    return corpus, preds


@pytest.mark.parametrize("gold, detected, p, r, f1", TEN_DOCS)
def test_document_scores(gold, detected, p, r, f1):
    g, d = pairs(*gold), pairs(*detected)
    s = extraction_scores(intersect(g, d, 1.0))
    assert (s.p, s.r, s.f1) == pytest.approx((float(p), float(r), float(f1)), abs=1e-12)


def test_ten_document_macro():
    corpus, preds = ten_doc_corpus()
    report = macro_evaluate(corpus, preds, theta=1.0)
    assert report.macro_generalized["p"] == pytest.approx(97 / 200, abs=1e-12)
    assert report.macro_generalized["r"] == pytest.approx(23 / 40, abs=1e-12)
    assert report.macro_generalized["f1"] == pytest.approx(289 / 600, abs=1e-12)
    assert report.macro_exact == report.macro_generalized


def test_aircon_scores(aircon_backend):
    gold = pairs("AC", "look", "ambience", "service")
    det = pairs("air conditioner", "appearance", "dishes", "service", "drinks")
    s = extraction_scores(intersect(gold, det, 0.95, aircon_backend))
    assert (s.p, s.r) == (0.6, 0.75)
    assert s.f1 == pytest.approx(2 / 3, abs=1e-12)
    exact = exact_match_scores(gold, det)
    assert (exact.p, exact.r) == (0.2, 0.25)


def test_degenerate_policy():
    def prf(s):
        return s.p, s.r, s.f1
    assert prf(counts_to_scores("", 0, 0, 0)) == (1.0, 1.0, 1.0)
    assert prf(counts_to_scores("", 0, 3, 0)) == (0.0, 0.0, 0.0)
    assert prf(counts_to_scores("", 0, 0, 2)) == (0.0, 0.0, 0.0)


def test_macro_average_requires_documents():
    with pytest.raises(EmptyInputError):
        macro_average([])


small_sets = st.lists(st.sampled_from(["a", "b", "c", "d", "e", "f"]), unique=True, max_size=5)


@given(small_sets, small_sets)
def test_scores_bounded_and_theta_one_is_exact(gold, det):
    g, d = pairs(*gold), pairs(*det)
    gen = extraction_scores(intersect(g, d, 1.0))
    ex = exact_match_scores(g, d)
    assert (gen.p, gen.r, gen.f1) == (ex.p, ex.r, ex.f1)
    for v in (gen.p, gen.r, gen.f1):
        assert 0.0 <= v <= 1.0
    assert min(gen.p, gen.r) <= gen.f1 <= max(gen.p, gen.r)


@given(st.lists(st.text(alphabet="abc ", min_size=1, max_size=6).filter(str.strip), max_size=4),
       st.lists(st.text(alphabet="abc ", min_size=1, max_size=6).filter(str.strip), max_size=4))
def test_lower_threshold_never_loses_exact_matches(gold, det):
    from aspecteval.model import normalize_phrase
    gold = list({normalize_phrase(x): x for x in gold}.values())
    det = list({normalize_phrase(x): x for x in det}.values())
    backend = CharNgramBackend(2)
    assert len(intersect(gold, det, 1.0, backend).pairs) <= len(intersect(gold, det, 0.95, backend).pairs)


# -- aspect sentiment classification ----------------------------------------------


def test_polarity_mismatch_counts_fn_and_fp():
    gold = (AspectPolarityPair("food", "positive"),)
    det = (AspectPolarityPair("food", "negative"),)
    counts = asc_confusion(intersect(gold, det, 1.0), gold, det)
    assert (counts["positive"].fn, counts["positive"].tp) == (1, 0)
    assert counts["negative"].fp == 1
    assert counts["positive"].scores()["p"] == 0 and counts["negative"].scores()["r"] == 0


def test_unmatched_aspects_count_against_recall_and_precision():
    gold = (AspectPolarityPair("food", "positive"), AspectPolarityPair("staff", "negative"))
    det = (AspectPolarityPair("food", "positive"), AspectPolarityPair("music", "neutral"))
    counts = asc_confusion(intersect(gold, det, 1.0), gold, det)
    assert (counts["positive"].tp, counts["negative"].fn, counts["neutral"].fp) == (1, 1, 1)


def test_conflicting_folds_to_neutral():
    gold = (AspectPolarityPair("food", "conflicting"),)
    det = (AspectPolarityPair("food", "neutral"),)
    match = intersect(gold, det, 1.0)
    assert asc_confusion(match, gold, det)["neutral"].tp == 1
    strict = asc_confusion(match, gold, det, strict=True)
    assert strict["conflicting"].fn == 1 and strict["neutral"].fp == 1


def test_asc_report():
    corpus = [AnnotatedDocument("1", "", (AspectPolarityPair("food", "positive"),)),
              AnnotatedDocument("2", "", ())]
    preds = [PredictionRecord("1", (AspectPolarityPair("Food", "positive"),))]
    report = macro_evaluate(corpus, preds, theta=1.0)
    assert report.asc.macro == {"p": 1.0, "r": 1.0, "f1": 1.0}
    assert report.asc.per_class["positive"]["tp"] == 1
    assert report.missing_predictions == ["2"]


def test_asc_perfect_polarity_equals_extraction_when_single_class():
    rng = np.random.default_rng(3)
    for _ in range(50):
        gold = pairs(*rng.choice(list("abcdef"), size=rng.integers(1, 5), replace=False))
        det = pairs(*rng.choice(list("abcdef"), size=rng.integers(1, 5), replace=False))
        report = macro_evaluate([AnnotatedDocument("d", "", gold)], [PredictionRecord("d", det)], 1.0)
        gen = report.generalized[0]
        assert report.asc.per_doc[0]["p"] == pytest.approx(gen.p)
        assert report.asc.per_doc[0]["r"] == pytest.approx(gen.r)


# -- corpus evaluation ------------------------------------------------------------


def test_unknown_and_duplicate_predictions():
    corpus = [AnnotatedDocument("1", "", pairs("a"))]
    with pytest.raises(UnknownDocIdError):
        macro_evaluate(corpus, [PredictionRecord("2", ())])
    with pytest.raises(DuplicateDocIdError):
        macro_evaluate(corpus, [PredictionRecord("1", ()), PredictionRecord("1", ())])


def test_empty_corpus():
    with pytest.raises(EmptyInputError):
        macro_evaluate([], [])


def test_report_dict_has_phrases(aircon_backend, fixtures_dir):
    from aspecteval.dataio import load_corpus, load_predictions
    gold = load_corpus(fixtures_dir / "aircon_gold.jsonl")
    preds = load_predictions(fixtures_dir / "aircon_pred.jsonl")
    report = macro_evaluate(gold, preds, 0.95, aircon_backend)
    body = report.to_dict(gold, preds)
    matched = {(m["gold"], m["detected"]) for m in body["documents"][0]["matches"]}
    assert matched == {("AC", "air conditioner"), ("look", "appearance"), ("service", "service")}
    assert body["backend"] == "oracle:aircon_oracle.csv"
    assert report.per_document_rows()[0]["matched"] == 3


def test_exact_backend_default():
    report = macro_evaluate([AnnotatedDocument("1", "", pairs("a"))], [PredictionRecord("1", pairs("A"))])
    assert report.backend == ExactBackend().id and report.macro_generalized["f1"] == 1.0
