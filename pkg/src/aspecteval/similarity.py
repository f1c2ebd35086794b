"""Phrase similarity backends mapping two normalized phrases into [0, 1].

Four backends are available:

* ``exact``       indicator of equal normalized phrases
* ``char-ngram``  Dice coefficient over character n-grams (offline fallback)
* ``embedding``   scaled cosine between sentence embeddings, served by an
                  external HTTP service and persisted in a JSONL cache
* ``oracle``      similarities read from a CSV table, for hermetic fixtures
"""

from __future__ import annotations

import csv
import json
import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import requests
from filelock import FileLock

from aspecteval.errors import (
    DimensionMismatchError,
    MissingEmbeddingError,
    ParseError,
    ProviderDimensionChangedError,
    ProviderUnreachableError,
    ZeroVectorError,
)
from aspecteval.model import normalize_phrase

log = logging.getLogger(__name__)


def scaled_cosine(u, v) -> float:
    """Cosine similarity mapped affinely from [-1, 1] onto [0, 1]."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.ndim != 1 or u.shape != v.shape:
        raise DimensionMismatchError(f"cannot compare vectors of shape {u.shape} and {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise ZeroVectorError("cosine is undefined for an all-zero vector")
    cos = float(np.dot(u, v)) / (nu * nv)
    return min(1.0, max(0.0, (1.0 + cos) / 2.0))


class SimilarityBackend:
    """Base class. Subclasses implement ``score`` on normalized phrases."""

    kind = "abstract"

    @property
    def id(self) -> str:
        return self.kind

    def score(self, a: str, b: str) -> float:
        raise NotImplementedError

    def prepare(self, phrases: Iterable[str]) -> None:
        """Hook to warm caches before a batch of ``score`` calls."""

    def matrix(self, gold: Sequence[str], detected: Sequence[str]) -> np.ndarray:
        self.prepare(list(gold) + list(detected))
        m = np.zeros((len(gold), len(detected)), dtype=np.float64)
        for i, g in enumerate(gold):
            for j, d in enumerate(detected):
                m[i, j] = self.score(g, d)
        return m

    def __repr__(self):
        return f"<{type(self).__name__} {self.id}>"


class ExactBackend(SimilarityBackend):
    kind = "exact"

    def score(self, a, b):
        return 1.0 if a == b else 0.0


def char_ngrams(text: str, n: int = 3) -> frozenset[str]:
    if len(text) <= n:
        return frozenset([text])
    return frozenset(text[i:i + n] for i in range(len(text) - n + 1))


class CharNgramBackend(SimilarityBackend):
    kind = "char-ngram"

    def __init__(self, n: int = 3):
        if n < 1:
            raise ValueError("n-gram size must be positive")
        self.n = n

    @property
    def id(self):
        return f"char-ngram:{self.n}"

    def score(self, a, b):
        if a == b:
            return 1.0
        ga, gb = char_ngrams(a, self.n), char_ngrams(b, self.n)
        return 2.0 * len(ga & gb) / (len(ga) + len(gb))


class OracleBackend(SimilarityBackend):
    """Similarities looked up from a table keyed by unordered phrase pairs.

    Pairs missing from the table fall back to the exact indicator.
    """

    kind = "oracle"

    def __init__(self, table: dict[tuple[str, str], float], name: str = "table"):
        self.name = name
        self._table: dict[tuple[str, str], float] = {}
        for (a, b), sigma in table.items():
            a, b = normalize_phrase(a), normalize_phrase(b)
            sigma = float(sigma)
            if not 0.0 <= sigma <= 1.0:
                raise ValueError(f"similarity for ({a!r}, {b!r}) outside [0, 1]: {sigma}")
            key = (a, b) if a <= b else (b, a)
            if key in self._table and self._table[key] != sigma:
                raise ValueError(f"conflicting similarities for ({a!r}, {b!r})")
            self._table[key] = sigma

    @property
    def id(self):
        return f"oracle:{self.name}"

    @classmethod
    def from_csv(cls, path) -> "OracleBackend":
        path = Path(path)
        table = {}
        with open(path, newline="", encoding="utf-8") as f:
            reader = csv.DictReader(f)
            missing = {"phrase_a", "phrase_b", "sigma"} - set(reader.fieldnames or ())
            if missing:
                raise ParseError(f"missing columns {sorted(missing)}", path=path, locus=1)
            for lineno, row in enumerate(reader, start=2):
                try:
                    a, b = normalize_phrase(row["phrase_a"]), normalize_phrase(row["phrase_b"])
                    sigma = float(row["sigma"])
                except (TypeError, ValueError) as exc:
                    raise ParseError(str(exc), path=path, locus=lineno) from None
                if not 0.0 <= sigma <= 1.0:
                    raise ParseError(f"sigma {sigma} outside [0, 1]", path=path, locus=lineno)
                key = (a, b) if a <= b else (b, a)
                if key in table and table[key] != sigma:
                    raise ParseError(f"conflicting sigma for {key}", path=path, locus=lineno)
                table[key] = sigma
        return cls(table, name=path.name)

    def score(self, a, b):
        key = (a, b) if a <= b else (b, a)
        sigma = self._table.get(key)
        if sigma is None:
            return 1.0 if a == b else 0.0
        return sigma


class EmbeddingCache:
    """Vectors keyed by (provider id, normalized phrase), backed by JSON Lines.

    The file is append-only and the last record for a key wins. Each batch
    is appended in one write under an exclusive file lock. With ``path=None``
    the cache lives in memory only.
    """

    def __init__(self, path=None):
        self.path = Path(path) if path is not None else None
        self._vectors: dict[tuple[str, str], np.ndarray] = {}
        self._dims: dict[str, int] = {}
        self._mutex = threading.RLock()
        if self.path is not None and self.path.exists():
            self._load()

    def _load(self):
        with open(self.path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                if not line.strip():
                    continue
                try:
                    rec = json.loads(line)
                    provider, text, dim = rec["provider"], rec["text"], int(rec["dim"])
                    vec = np.asarray(rec["vector"], dtype=np.float64)
                except (ValueError, KeyError, TypeError) as exc:
                    raise ParseError(f"bad cache record: {exc}", path=self.path, locus=lineno) from None
                if vec.shape != (dim,):
                    raise ParseError(f"vector length {vec.size} != dim {dim}", path=self.path, locus=lineno)
                self._store(provider, text, vec)

    def _store(self, provider, text, vec):
        known = self._dims.setdefault(provider, vec.size)
        if known != vec.size:
            raise ProviderDimensionChangedError(
                f"provider {provider!r}: cached dim {known}, got {vec.size}"
            )
        vec = vec.copy()
        vec.setflags(write=False)
        self._vectors[(provider, text)] = vec

    def __contains__(self, key):
        return key in self._vectors

    def __len__(self):
        return len(self._vectors)

    def get(self, provider: str, text: str):
        return self._vectors.get((provider, text))

    def dim(self, provider: str):
        return self._dims.get(provider)

    def put_many(self, provider: str, items: Sequence[tuple[str, Sequence[float]]]) -> None:
        items = [(text, np.asarray(vec, dtype=np.float64)) for text, vec in items]
        if not items:
            return
        with self._mutex:
            dim = self._dims.get(provider, items[0][1].size)
            for text, vec in items:
                if vec.ndim != 1 or vec.size != dim:
                    raise ProviderDimensionChangedError(
                        f"provider {provider!r}: expected dim {dim}, got {vec.shape}"
                    )
            if self.path is not None:
                lines = "".join(
                    json.dumps({"provider": provider, "text": text, "dim": int(vec.size),
                                "vector": vec.tolist()}, ensure_ascii=False) + "\n"
                    for text, vec in items
                )
                self.path.parent.mkdir(parents=True, exist_ok=True)
                with FileLock(str(self.path) + ".lock"):
                    with open(self.path, "a", encoding="utf-8", newline="\n") as f:
                        f.write(lines)
                        f.flush()
                        os.fsync(f.fileno())
            for text, vec in items:
                self._store(provider, text, vec)


class HttpEmbeddingProvider:
    """Client for ``POST {url}/embed`` returning ``{"model", "dim", "vectors"}``."""

    def __init__(self, url: str, model: str, *, timeout: float = 60.0, batch_size: int = 64,
                 max_workers: int = 4, session=None):
        self.url = url.rstrip("/") + "/embed"
        self.model = model
        self.timeout = timeout
        self.batch_size = batch_size
        self.max_workers = max(1, max_workers)
        self.session = session or requests.Session()
        self.calls = 0

    def _post(self, texts: list[str]) -> list[list[float]]:
        self.calls += 1
        try:
            resp = self.session.post(self.url, json={"model": self.model, "texts": texts},
                                     timeout=self.timeout)
        except requests.RequestException as exc:
            raise ProviderUnreachableError(f"{self.url}: {exc}") from exc
        if resp.status_code != 200:
            raise ProviderUnreachableError(f"{self.url}: HTTP {resp.status_code}")
        try:
            body = resp.json()
            dim = int(body["dim"])
            vectors = body["vectors"]
        except (ValueError, KeyError, TypeError) as exc:
            raise ProviderUnreachableError(f"{self.url}: malformed response ({exc})") from None
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderUnreachableError(f"{self.url}: {len(texts)} texts but misaligned vectors")
        if any(not isinstance(v, list) or len(v) != dim for v in vectors):
            raise ProviderUnreachableError(f"{self.url}: vector lengths disagree with dim={dim}")
        return vectors

    def embed(self, texts: Sequence[str]) -> list[list[float]]:
        batches = [list(texts[i:i + self.batch_size]) for i in range(0, len(texts), self.batch_size)]
        if len(batches) <= 1 or self.max_workers == 1:
            out = [self._post(b) for b in batches]
        else:
            with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
                out = list(pool.map(self._post, batches))
        return [v for batch in out for v in batch]


def embed_batch(phrases: Sequence[str], provider_id: str, cache: EmbeddingCache,
                provider: HttpEmbeddingProvider | None = None) -> list[np.ndarray]:
    """Vectors for ``phrases`` in input order, fetching cache misses from ``provider``."""
    keys = [normalize_phrase(p) for p in phrases]
    missing = list(dict.fromkeys(k for k in keys if cache.get(provider_id, k) is None))
    if missing:
        if provider is None:
            raise MissingEmbeddingError(f"no cached vector for {missing[0]!r} and no provider configured")
        if provider.model != provider_id:
            raise ValueError(f"provider serves {provider.model!r}, asked for {provider_id!r}")
        log.info("embedding %d phrases with %s", len(missing), provider_id)
        vectors = provider.embed(missing)
        cache.put_many(provider_id, list(zip(missing, vectors)))
    return [cache.get(provider_id, k) for k in keys]


class EmbeddingBackend(SimilarityBackend):
    kind = "embedding"

    def __init__(self, provider_id: str, cache: EmbeddingCache | None = None,
                 provider: HttpEmbeddingProvider | None = None):
        self.provider_id = provider_id
        self.cache = cache if cache is not None else EmbeddingCache()
        self.provider = provider

    @property
    def id(self):
        return f"embedding:{self.provider_id}"

    def prepare(self, phrases):
        phrases = list(phrases)
        if phrases:
            embed_batch(phrases, self.provider_id, self.cache, self.provider)

    def _vector(self, phrase):
        vec = self.cache.get(self.provider_id, phrase)
        if vec is None:
            vec = embed_batch([phrase], self.provider_id, self.cache, self.provider)[0]
        return vec

    def score(self, a, b):
        if a == b:
            return 1.0
        return scaled_cosine(self._vector(a), self._vector(b))


def similarity(a: str, b: str, backend: SimilarityBackend) -> float:
    return backend.score(normalize_phrase(a), normalize_phrase(b))


def make_backend(spec: str, *, provider_url=None, cache_path=None, jobs: int = 4) -> SimilarityBackend:
    """Build a backend from a CLI-style spec.

    ``exact``, ``char-ngram[:N]``, ``embedding:MODEL`` or ``oracle:FILE``.
    """
    kind, _, arg = spec.partition(":")
    if kind == "exact" and not arg:
        return ExactBackend()
    if kind == "char-ngram":
        return CharNgramBackend(int(arg) if arg else 3)
    if kind == "oracle":
        if not arg:
            raise ValueError("oracle backend needs a file: oracle:FILE")
        return OracleBackend.from_csv(arg)
    if kind == "embedding":
        model = arg or "sentence-t5-large"
        provider = HttpEmbeddingProvider(provider_url, model, max_workers=jobs) if provider_url else None
        return EmbeddingBackend(model, EmbeddingCache(cache_path), provider)
    raise ValueError(f"unknown backend spec {spec!r}")

