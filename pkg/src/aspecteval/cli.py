"""Command-line entry point: ``aspecteval {evaluate,compare,sweep,kappa,convert}``.

Every option can also be supplied through an ``ASPECTEVAL_<OPTION>``
environment variable (e.g. ``ASPECTEVAL_THETA=0.9``); explicit flags win.

Exit codes: 0 success, 2 invalid input or configuration, 3 embedding
provider failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import os
import sys
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from aspecteval import __version__
from aspecteval.dataio import CORPUS_FORMATS, PREDICTION_FORMATS, convert, load_corpus, load_predictions, summarize
from aspecteval.errors import AspectEvalError, DegenerateAgreementWarning, ProviderError
from aspecteval.matching import DEFAULT_THETA, check_theta
from aspecteval.metrics import align_predictions, macro_evaluate
from aspecteval.model import normalize_phrase
from aspecteval.similarity import make_backend
from aspecteval.stats import (
    DEFAULT_ITERATIONS,
    DEFAULT_SEED,
    bin_scores,
    default_grid,
    fleiss_kappa,
    paired_bootstrap,
    ratings_table,
    theta_sweep,
)

log = logging.getLogger("aspecteval")

EXIT_OK, EXIT_INPUT, EXIT_PROVIDER = 0, 2, 3
ENV_PREFIX = "ASPECTEVAL_"


@dataclass
class RunConfig:
    theta: float = DEFAULT_THETA
    backend: str = "exact"
    provider_url: str | None = None
    cache: str | None = None
    seed: int = DEFAULT_SEED
    iterations: int = DEFAULT_ITERATIONS
    grid: list[float] = field(default_factory=default_grid)
    jobs: int = 4
    format: str = "canonical"
    pred_format: str = "canonical"
    strict_polarity: bool = False
    on_duplicate: str = "error"
    out: str = "aspecteval-out"

    def validate(self):
        check_theta(self.theta)
        if self.iterations < 1:
            raise ValueError("--iterations must be positive")
        if self.jobs < 1:
            raise ValueError("--jobs must be positive")
        if self.format not in CORPUS_FORMATS:
            raise ValueError(f"--format must be one of {CORPUS_FORMATS}")
        if self.pred_format not in PREDICTION_FORMATS:
            raise ValueError(f"--pred-format must be one of {PREDICTION_FORMATS}")
        kind = self.backend.partition(":")[0]
        if kind not in ("exact", "char-ngram", "embedding", "oracle"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if kind == "embedding" and not (self.provider_url or self.cache):
            raise ValueError("embedding backend needs --provider-url or a --cache file")
        grid = [check_theta(t) for t in self.grid]
        if not grid or any(t <= 0 for t in grid) or any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValueError("--grid must be strictly increasing within (0, 1]")
        return self

    def make_backend(self):
        return make_backend(self.backend, provider_url=self.provider_url, cache_path=self.cache, jobs=self.jobs)


def parse_grid(spec: str) -> list[float]:
    """``START:STOP:STEP`` (inclusive) or a comma-separated list."""
    if ":" in spec:
        start, stop, step = (float(x) for x in spec.split(":"))
        count = int(round((stop - start) / step)) + 1
        return [round(start + k * step, 6) for k in range(count)]
    return [float(x) for x in spec.split(",") if x.strip()]


def file_digest(path) -> dict:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return {"path": str(path), "sha256": h.hexdigest()}


def _envelope(config: RunConfig, inputs: dict) -> dict:
    return {
        "tool": {"name": "aspecteval", "version": __version__},
        "config": asdict(config),
        "inputs": {role: file_digest(p) for role, p in inputs.items()},
    }


def _write_json(path: Path, body: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(body, f, indent=2, ensure_ascii=False)
        f.write("\n")


def _write_csv(path: Path, rows: list[dict], fieldnames: list[str]):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.DictWriter(f, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)


# -- commands ---------------------------------------------------------------------


def cmd_evaluate(args, config: RunConfig) -> int:
    corpus = load_corpus(args.gold, config.format, on_duplicate=config.on_duplicate)
    preds = load_predictions(args.predictions, config.pred_format)
    report = macro_evaluate(corpus, preds, config.theta, config.make_backend(), config.strict_polarity)
    aligned, _ = align_predictions(corpus, preds)

    out = Path(config.out)
    body = _envelope(config, {"gold": args.gold, "predictions": args.predictions})
    body.update(report.to_dict(corpus, aligned))
    _write_json(out / "report.json", body)
    rows = report.per_document_rows()
    _write_csv(out / "per_document.csv", rows, list(rows[0]))
    for msg in body["warnings"]:
        log.warning(msg)
    g, e = report.macro_generalized, report.macro_exact
    print(f"theta={config.theta} backend={report.backend} documents={len(corpus)}")
    print(f"generalized  P={g['p']:.3f} R={g['r']:.3f} F1={g['f1']:.3f}")
    print(f"exact match  P={e['p']:.3f} R={e['r']:.3f} F1={e['f1']:.3f}")
    print(f"ASC          P={report.asc.macro['p']:.3f} R={report.asc.macro['r']:.3f} F1={report.asc.macro['f1']:.3f}")
    return EXIT_OK


def cmd_compare(args, config: RunConfig) -> int:
    corpus = load_corpus(args.gold, config.format, on_duplicate=config.on_duplicate)
    backend = config.make_backend()
    reports = []
    for path in (args.predictions_a, args.predictions_b):
        report = macro_evaluate(corpus, load_predictions(path, config.pred_format),
                                config.theta, backend, config.strict_polarity)
        if report.missing_predictions:
            log.warning("%s has no prediction for %d documents; scored as empty",
                        path, len(report.missing_predictions))
        reports.append(report)
    metric = args.metric
    a = [getattr(s, metric) for s in reports[0].generalized]
    b = [getattr(s, metric) for s in reports[1].generalized]
    result = paired_bootstrap(a, b, config.iterations, config.seed, metric=metric, jobs=config.jobs)

    body = result.to_dict()
    body.update({
        "alpha": args.alpha,
        "significant": result.significant(args.alpha),
        "mean_a": reports[0].macro_generalized[metric],
        "mean_b": reports[1].macro_generalized[metric],
    })
    body.update(_envelope(config, {"gold": args.gold, "predictions_a": args.predictions_a,
                                   "predictions_b": args.predictions_b}))
    _write_json(Path(config.out) / "compare.json", body)
    print(f"{metric}: A={body['mean_a']:.4f} B={body['mean_b']:.4f} delta={result.observed_delta:+.4f} "
          f"p={result.p_value:.5f} significant={body['significant']}")
    return EXIT_OK


def _load_labels(path):
    labels = {}
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.DictReader(f):
            verdict = row["valid"].strip().lower() in ("1", "true", "yes", "y", "valid")
            labels[(normalize_phrase(row["detected"]), normalize_phrase(row["gold"]))] = verdict
    return labels


def cmd_sweep(args, config: RunConfig) -> int:
    corpus = load_corpus(args.gold, config.format, on_duplicate=config.on_duplicate)
    systems = {}
    for path in args.predictions:
        name = Path(path).stem
        if name in systems:
            name = str(path)
        systems[name] = load_predictions(path, config.pred_format)
    labels = _load_labels(args.labels) if args.labels else None
    result = theta_sweep(corpus, systems, config.grid, config.make_backend(), labels)

    out = Path(config.out)
    _write_csv(out / "sweep.csv", [asdict(r) for r in result.rows],
               ["theta", "matched_pairs", "non_exact_pairs", "exact_pairs", "error_fraction"])
    _write_csv(out / "pairs.csv", [asdict(p) for p in result.pairs],
               ["theta", "system", "doc_id", "detected", "gold", "similarity"])
    inputs = {"gold": args.gold, **{f"predictions[{k}]": p for k, p in enumerate(args.predictions)}}
    if args.labels:
        inputs["labels"] = args.labels
    body = _envelope(config, inputs)
    body["rows"] = [asdict(r) for r in result.rows]
    _write_json(out / "sweep.json", body)
    for r in result.rows:
        print(f"theta={r.theta:.3f} matched={r.matched_pairs} non_exact={r.non_exact_pairs} exact={r.exact_pairs}")
    return EXIT_OK


def _read_ratings(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f)
        missing = {"item", "rater", "value"} - set(reader.fieldnames or ())
        if missing:
            raise ValueError(f"{path}: missing columns {sorted(missing)}")
        for row in reader:
            rows.append((row["item"], row["rater"], row["value"].strip()))
    return rows


def _as_numbers(values):
    try:
        return [float(v) for v in values]
    except ValueError:
        return None


def cmd_kappa(args, config: RunConfig) -> int:
    rows = _read_ratings(args.ratings)
    values = [v for _, _, v in rows]
    numeric = _as_numbers(values)
    bins = args.bins
    if bins == "auto":
        bins = "quartiles" if numeric is not None and len(set(numeric)) > 4 else "none"
    edges = None
    if bins != "none":
        if numeric is None:
            raise ValueError("binning requested but ratings are not numeric")
        labels = bin_scores(numeric, None if bins == "quartiles" else [float(x) for x in bins.split(",")])
        if bins == "quartiles":
            edges = np.quantile(np.asarray(numeric), [0.25, 0.5, 0.75]).tolist()
        else:
            edges = [float(x) for x in bins.split(",")]
        rows = [(item, rater, int(lab)) for (item, rater, _), lab in zip(rows, labels)]
    table, items, categories = ratings_table(rows)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", DegenerateAgreementWarning)
        kappa = fleiss_kappa(table)
    degenerate = any(issubclass(w.category, DegenerateAgreementWarning) for w in caught)
    body = {
        "kappa": kappa,
        "degenerate": degenerate,
        "items": len(items),
        "raters_per_item": int(table.sum(axis=1)[0]),
        "categories": [str(c) for c in categories],
        "bins": bins,
        "bin_edges": edges,
    }
    body.update(_envelope(config, {"ratings": args.ratings}))
    _write_json(Path(config.out) / "kappa.json", body)
    print(f"fleiss kappa={kappa:.4f} items={len(items)} categories={len(categories)}"
          + (" (degenerate: single category)" if degenerate else ""))
    return EXIT_OK


def cmd_convert(args, config: RunConfig) -> int:
    docs = convert(args.source, config.format, args.dest, on_duplicate=config.on_duplicate,
                   keep_empty=args.keep_empty)
    print(json.dumps(summarize(docs)))
    return EXIT_OK


# -- argument parsing -------------------------------------------------------------


def _env(name, default=None, cast=str):
    raw = os.environ.get(ENV_PREFIX + name)
    return default if raw is None else cast(raw)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--theta", type=float, default=_env("THETA", DEFAULT_THETA, float))
    common.add_argument("--backend", default=_env("BACKEND", "exact"),
                        help="exact | char-ngram[:N] | embedding[:MODEL] | oracle:FILE")
    common.add_argument("--provider-url", default=_env("PROVIDER_URL"))
    common.add_argument("--cache", default=_env("CACHE"), help="embedding cache (JSON Lines)")
    common.add_argument("--seed", type=int, default=_env("SEED", DEFAULT_SEED, int))
    common.add_argument("--iterations", type=int, default=_env("ITERATIONS", DEFAULT_ITERATIONS, int))
    common.add_argument("--grid", default=_env("GRID"), help="START:STOP:STEP or comma list")
    common.add_argument("--jobs", type=int, default=_env("JOBS", 4, int))
    common.add_argument("--format", default=_env("FORMAT", "canonical"), choices=CORPUS_FORMATS,
                        help="gold/source file format")
    common.add_argument("--pred-format", default=_env("PRED_FORMAT", "canonical"), choices=PREDICTION_FORMATS)
    common.add_argument("--strict-polarity", action="store_true",
                        default=_env("STRICT_POLARITY", False, lambda v: v.lower() in ("1", "true", "yes")),
                        help="score conflicting as its own class instead of folding it into neutral")
    common.add_argument("--on-duplicate", choices=("error", "first"), default=_env("ON_DUPLICATE", "error"))
    common.add_argument("--out", default=_env("OUT", "aspecteval-out"), help="output directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="aspecteval", description="Generalized precision/recall evaluation for aspect-based sentiment analysis.")
    parser.add_argument("--version", action="version", version=f"aspecteval {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", parents=[common], help="score predictions against gold")
    p.add_argument("gold")
    p.add_argument("predictions")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", parents=[common], help="paired bootstrap test between two systems")
    p.add_argument("gold")
    p.add_argument("predictions_a")
    p.add_argument("predictions_b")
    p.add_argument("--metric", choices=("f1", "p", "r"), default="f1")
    p.add_argument("--alpha", type=float, default=0.05)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", parents=[common], help="count non-exact matches across thresholds")
    p.add_argument("gold")
    p.add_argument("predictions", nargs="+")
    p.add_argument("--labels", help="reviewer CSV with columns detected, gold, valid")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("kappa", parents=[common], help="Fleiss' kappa from an item,rater,value CSV")
    p.add_argument("ratings")
    p.add_argument("--bins", default="auto", help="auto | none | quartiles | comma-separated edges")
    p.set_defaults(func=cmd_kappa)

    p = sub.add_parser("convert", parents=[common], help="convert a dataset to canonical JSON Lines")
    p.add_argument("source")
    p.add_argument("dest")
    p.add_argument("--keep-empty", action="store_true", help="keep XML sentences without aspect terms")
    p.set_defaults(func=cmd_convert)
    return parser


def config_from_args(args) -> RunConfig:
    return RunConfig(
        theta=args.theta,
        backend=args.backend,
        provider_url=args.provider_url,
        cache=args.cache,
        seed=args.seed,
        iterations=args.iterations,
        grid=parse_grid(args.grid) if args.grid else default_grid(),
        jobs=args.jobs,
        format=args.format,
        pred_format=args.pred_format,
        strict_polarity=args.strict_polarity,
        on_duplicate=args.on_duplicate,
        out=args.out,
    )


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args).validate()
        return args.func(args, config)
    except ProviderError as exc:
        print(f"aspecteval: embedding provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except (AspectEvalError, ValueError, KeyError, OSError) as exc:
        print(f"aspecteval: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
