"""Corpus and prediction files, dataset converters and LLM output parsing.

Canonical corpus files are UTF-8 JSON Lines with one document per line::

    {"id": "...", "text": "...", "aspects": [{"aspect": "...", "polarity": "..."}]}

Prediction files use the same shape without ``text``. Raw model outputs can
be consumed as ``{"id": "...", "output": "<model text>"}`` lines
(format ``llm``), which are run through :func:`parse_llm_annotation`.
"""

from __future__ import annotations

import ast
import json
import logging
import re
import warnings
import xml.etree.ElementTree as ET
from collections import Counter
from pathlib import Path
from typing import Iterable, NamedTuple, Sequence

from aspecteval.errors import (
    ConflictingDuplicateAspectError,
    DuplicateDocIdError,
    EmptyPhraseError,
    ParseError,
)
from aspecteval.model import (
    AnnotatedDocument,
    AspectPolarityPair,
    Polarity,
    PredictionRecord,
    dedupe_pairs,
    normalize_phrase,
)

log = logging.getLogger(__name__)

CORPUS_FORMATS = ("canonical", "semeval-xml", "twitter-triple", "sport-json")
PREDICTION_FORMATS = ("canonical", "llm")

_TWITTER_LABELS = {"-1": Polarity.NEGATIVE, "0": Polarity.NEUTRAL, "1": Polarity.POSITIVE}


def _pairs(items: Iterable[tuple[str, str]], context: str, on_duplicate: str) -> tuple[AspectPolarityPair, ...]:
    pairs = [AspectPolarityPair(a, p) for a, p in items]
    if on_duplicate == "first":
        seen = {}
        for pair in pairs:
            seen.setdefault(pair.key, pair)
        return tuple(seen.values())
    return dedupe_pairs(pairs, context=context)


def _check_unique_ids(docs, path):
    seen = set()
    for doc in docs:
        doc_id = doc.id if isinstance(doc, AnnotatedDocument) else doc.doc_id
        if doc_id in seen:
            raise DuplicateDocIdError(f"{path}: document id {doc_id!r} appears twice")
        seen.add(doc_id)


def _read_jsonl(path: Path):
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"invalid JSON: {exc.msg}", path=path, locus=lineno) from None
            if not isinstance(rec, dict):
                raise ParseError("record is not a JSON object", path=path, locus=lineno)
            yield lineno, rec


def _aspect_items(rec, path, lineno):
    aspects = rec.get("aspects", [])
    if not isinstance(aspects, list):
        raise ParseError("'aspects' must be a list", path=path, locus=lineno)
    items = []
    for a in aspects:
        if not isinstance(a, dict) or not isinstance(a.get("aspect"), str) or "polarity" not in a:
            raise ParseError("each aspect needs 'aspect' and 'polarity'", path=path, locus=lineno)
        items.append((a["aspect"], a["polarity"]))
    return items


def _load_canonical(path: Path, on_duplicate: str) -> list[AnnotatedDocument]:
    docs = []
    for lineno, rec in _read_jsonl(path):
        if not isinstance(rec.get("id"), str) or not isinstance(rec.get("text"), str):
            raise ParseError("record needs string 'id' and 'text'", path=path, locus=lineno)
        try:
            gold = _pairs(_aspect_items(rec, path, lineno), f"document {rec['id']!r}", on_duplicate)
        except (ValueError, EmptyPhraseError) as exc:
            if isinstance(exc, ConflictingDuplicateAspectError):
                raise
            raise ParseError(str(exc), path=path, locus=lineno) from None
        docs.append(AnnotatedDocument(rec["id"], rec["text"], gold))
    return docs


def _load_semeval_xml(path: Path, on_duplicate: str, keep_empty: bool) -> list[AnnotatedDocument]:
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as exc:
        raise ParseError(f"invalid XML: {exc}", path=path, locus=exc.position[0]) from None
    docs = []
    for n, sentence in enumerate(root.iter("sentence")):
        doc_id = sentence.get("id") or f"{path.stem}-{n}"
        text_el = sentence.find("text")
        if text_el is None or text_el.text is None:
            raise ParseError("sentence without <text>", path=path, locus=f"sentence {doc_id}")
        items = []
        for term in sentence.iter("aspectTerm"):
            if term.get("term") is None or term.get("polarity") is None:
                raise ParseError("aspectTerm needs term and polarity", path=path, locus=f"sentence {doc_id}")
            items.append((term.get("term"), term.get("polarity")))
        if not items and not keep_empty:
            continue
        try:
            gold = _pairs(items, f"sentence {doc_id!r}", on_duplicate)
        except ConflictingDuplicateAspectError:
            raise
        except (ValueError, EmptyPhraseError) as exc:
            raise ParseError(str(exc), path=path, locus=f"sentence {doc_id}") from None
        docs.append(AnnotatedDocument(doc_id, text_el.text, gold))
    return docs


def _load_twitter(path: Path) -> list[AnnotatedDocument]:
    with open(path, encoding="utf-8") as f:
        lines = [line.rstrip("\r\n") for line in f]
    while lines and not lines[-1].strip():
        lines.pop()
    if len(lines) % 3:
        raise ParseError(f"{len(lines)} lines is not a multiple of 3", path=path, locus=len(lines))
    docs = []
    for k in range(0, len(lines), 3):
        template, target, label = lines[k], lines[k + 1].strip(), lines[k + 2].strip()
        if "$T$" not in template:
            raise ParseError("sentence line lacks the $T$ placeholder", path=path, locus=k + 1)
        if label not in _TWITTER_LABELS:
            raise ParseError(f"label {label!r} is not one of -1, 0, 1", path=path, locus=k + 3)
        if not target:
            raise ParseError("empty target", path=path, locus=k + 2)
        text = template.replace("$T$", target).strip()
        docs.append(AnnotatedDocument(str(k // 3), text,
                                      (AspectPolarityPair(target, _TWITTER_LABELS[label]),)))
    return docs


def _load_sport_json(path: Path, on_duplicate: str) -> list[AnnotatedDocument]:
    try:
        with open(path, encoding="utf-8") as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", path=path, locus=exc.lineno) from None
    if not isinstance(data, list):
        raise ParseError("expected a JSON array of documents", path=path, locus=1)
    docs = []
    for n, rec in enumerate(data):
        if not isinstance(rec, dict) or not isinstance(rec.get("text"), str):
            raise ParseError("record needs 'text'", path=path, locus=f"record {n}")
        annotations = rec.get("annotations") or {}
        if not isinstance(annotations, dict):
            raise ParseError("'annotations' must be an object", path=path, locus=f"record {n}")
        doc_id = str(rec.get("id", n))
        try:
            gold = _pairs(annotations.items(), f"document {doc_id!r}", on_duplicate)
        except ConflictingDuplicateAspectError:
            raise
        except (ValueError, EmptyPhraseError) as exc:
            raise ParseError(str(exc), path=path, locus=f"record {n}") from None
        docs.append(AnnotatedDocument(doc_id, rec["text"], gold))
    return docs


def load_corpus(path, format: str = "canonical", *, keep_empty: bool | None = None,
                on_duplicate: str = "error") -> list[AnnotatedDocument]:
    """Load a gold corpus.

    ``keep_empty`` controls whether SemEval/MAMS sentences without aspect
    terms are kept; by default they are dropped for XML and kept elsewhere.
    ``on_duplicate="first"`` keeps the first of two same-phrase aspects with
    different polarities instead of raising.
    """
    path = Path(path)
    if on_duplicate not in ("error", "first"):
        raise ValueError(f"on_duplicate must be 'error' or 'first', not {on_duplicate!r}")
    if format == "canonical":
        docs = _load_canonical(path, on_duplicate)
    elif format == "semeval-xml":
        docs = _load_semeval_xml(path, on_duplicate, bool(keep_empty))
    elif format == "twitter-triple":
        docs = _load_twitter(path)
    elif format == "sport-json":
        docs = _load_sport_json(path, on_duplicate)
    else:
        raise ValueError(f"unknown corpus format {format!r}; expected one of {CORPUS_FORMATS}")
    _check_unique_ids(docs, path)
    log.info("loaded %s: %s", path, summarize(docs))
    return docs


def summarize(docs: Sequence[AnnotatedDocument]) -> dict:
    """Document/aspect counts, polarity histogram and implicit-aspect rate.

    An aspect counts as implicit when its normalized phrase is not a
    substring of the normalized document text.
    """
    hist = Counter(p.polarity.value for d in docs for p in d.gold)
    total = sum(len(d.gold) for d in docs)
    implicit = 0
    for d in docs:
        try:
            text = normalize_phrase(d.text)
        except EmptyPhraseError:
            text = ""
        implicit += sum(1 for p in d.gold if p.key not in text)
    return {
        "documents": len(docs),
        "aspects": total,
        "unique_aspects": len({p.key for d in docs for p in d.gold}),
        "positive": hist["positive"],
        "negative": hist["negative"],
        "neutral": hist["neutral"],
        "conflicting": hist["conflicting"],
        "implicit_aspects": implicit,
        "implicit_rate": implicit / total if total else 0.0,
    }


def dumps_document(doc: AnnotatedDocument) -> str:
    return json.dumps({
        "id": doc.id,
        "text": doc.text,
        "aspects": [{"aspect": p.aspect, "polarity": p.polarity.value} for p in doc.gold],
    }, ensure_ascii=False)


def dumps_prediction(pred: PredictionRecord) -> str:
    return json.dumps({
        "id": pred.doc_id,
        "aspects": [{"aspect": p.aspect, "polarity": p.polarity.value} for p in pred.detected],
    }, ensure_ascii=False)


def write_corpus(docs: Iterable[AnnotatedDocument], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for doc in docs:
            f.write(dumps_document(doc) + "\n")


def write_predictions(preds: Iterable[PredictionRecord], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for pred in preds:
            f.write(dumps_prediction(pred) + "\n")


def convert(source, source_format: str, dest, **load_options) -> list[AnnotatedDocument]:
    """Convert a dataset file to a canonical JSONL corpus and return its documents."""
    docs = load_corpus(source, source_format, **load_options)
    write_corpus(docs, dest)
    return docs


def load_predictions(path, format: str = "canonical") -> list[PredictionRecord]:
    path = Path(path)
    if format not in PREDICTION_FORMATS:
        raise ValueError(f"unknown prediction format {format!r}; expected one of {PREDICTION_FORMATS}")
    preds = []
    for lineno, rec in _read_jsonl(path):
        if not isinstance(rec.get("id"), str):
            raise ParseError("record needs a string 'id'", path=path, locus=lineno)
        if format == "llm":
            parsed = parse_llm_annotation(rec.get("output", ""))
            for msg in parsed.diagnostics:
                log.warning("%s:%d (%s): %s", path, lineno, rec["id"], msg)
            preds.append(PredictionRecord(rec["id"], parsed.pairs))
            continue
        try:
            detected = _pairs(_aspect_items(rec, path, lineno), f"prediction {rec['id']!r}", "error")
        except ConflictingDuplicateAspectError:
            raise
        except (ValueError, EmptyPhraseError) as exc:
            raise ParseError(str(exc), path=path, locus=lineno) from None
        preds.append(PredictionRecord(rec["id"], detected))
    _check_unique_ids(preds, path)
    return preds


# -- tolerant parsing of model output -----------------------------------------


class LLMAnnotation(NamedTuple):
    pairs: tuple[AspectPolarityPair, ...]
    diagnostics: tuple[str, ...]


_TOKENS = re.compile(r'"(?:[^"\\]|\\.)*"|\'(?:[^\'\\]|\\.)*\'|[{}]', re.S)
_TRAILING_COMMA = re.compile(r",\s*(?=[}\]])")
_LOOSE_PAIR = re.compile(r'(["\'])(?P<key>.*?)\1\s*:\s*(["\'])(?P<value>.*?)\3', re.S)
_RESIDUE = 120


def _first_block(text: str) -> tuple[str | None, bool]:
    """First balanced {...} block, honouring quoted strings.

    Returns (block, closed). An unclosed block is returned up to the end of
    the text with closed=False.
    """
    start = text.find("{")
    if start < 0:
        return None, False
    depth = 0
    for tok in _TOKENS.finditer(text, start):
        t = tok.group()
        if t == "{":
            depth += 1
        elif t == "}":
            depth -= 1
            if depth == 0:
                return text[start:tok.end()], True
    return text[start:], False


def _decode_block(block: str):
    for candidate in (block, _TRAILING_COMMA.sub("", block)):
        try:
            return json.loads(candidate)
        except (ValueError, RecursionError):
            pass
        try:
            with warnings.catch_warnings():
                # malformed escapes in model output are not worth a warning
                warnings.simplefilter("ignore", SyntaxWarning)
                warnings.simplefilter("ignore", DeprecationWarning)
                return ast.literal_eval(candidate)
        except (ValueError, SyntaxError, TypeError, MemoryError, RecursionError):
            pass
    return None


def parse_llm_annotation(text) -> LLMAnnotation:
    """Aspect-polarity pairs from a model's ``{"aspect": "Polarity", ...}`` answer.

    Tolerates numbered prefixes ("3. {...}"), markdown fences, single quotes
    and trailing commas. Never raises: anything unusable is skipped and
    described in ``diagnostics`` together with the offending text.
    """
    diagnostics: list[str] = []
    try:
        if isinstance(text, bytes):
            text = text.decode("utf-8", errors="replace")
        elif not isinstance(text, str):
            text = "" if text is None else str(text)
        block, closed = _first_block(text)
        if block is None:
            if text.strip():
                diagnostics.append(f"no {{...}} block found; residue: {text.strip()[:_RESIDUE]!r}")
            return LLMAnnotation((), tuple(diagnostics))
        data = _decode_block(block) if closed else None
        if not isinstance(data, dict):
            if closed:
                diagnostics.append(f"block is not a valid mapping; salvaging pairs from {block[:_RESIDUE]!r}")
            else:
                diagnostics.append(f"unclosed block; salvaging pairs from {block[:_RESIDUE]!r}")
            data = {}
            for m in _LOOSE_PAIR.finditer(block):
                data.setdefault(m.group("key"), m.group("value"))

        pairs: dict[str, AspectPolarityPair] = {}
        for key, value in data.items():
            if not isinstance(key, str) or not isinstance(value, str):
                diagnostics.append(f"skipped non-string entry {key!r}: {value!r}"[:_RESIDUE * 2])
                continue
            try:
                pair = AspectPolarityPair(key, Polarity.parse(value.strip(" \t\n.!,;")))
            except EmptyPhraseError:
                diagnostics.append(f"skipped empty aspect with polarity {value!r}")
                continue
            except ValueError:
                diagnostics.append(f"skipped {key!r}: unknown polarity {value!r}")
                continue
            prev = pairs.get(pair.key)
            if prev is None:
                pairs[pair.key] = pair
            elif prev.polarity is not pair.polarity:
                diagnostics.append(f"kept first polarity for repeated aspect {key!r}")
        return LLMAnnotation(tuple(pairs.values()), tuple(diagnostics))
    except Exception as exc:  # noqa: BLE001 - parsing model output must never crash a run
        diagnostics.append(f"unparseable output ({type(exc).__name__}): {str(text)[:_RESIDUE]!r}")
        return LLMAnnotation((), tuple(diagnostics))
