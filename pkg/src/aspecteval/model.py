"""Domain types shared across the package.

All types are frozen dataclasses. Aspect sets are stored as tuples in input
order so that reports and matchings are reproducible; set semantics are
enforced at construction time (no two entries share a normalized phrase).
"""

from __future__ import annotations

import enum
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable

from aspecteval.errors import ConflictingDuplicateAspectError, EmptyPhraseError

_WHITESPACE = re.compile(r"\s+")


def normalize_phrase(raw: str) -> str:
    """Lowercase, NFC-normalize and collapse whitespace.

    Raises EmptyPhraseError when nothing is left.
    """
    text = unicodedata.normalize("NFC", raw)
    text = _WHITESPACE.sub(" ", text).strip().lower()
    # lower() can produce decomposed sequences (e.g. U+0130), so renormalize
    text = unicodedata.normalize("NFC", text)
    if not text:
        raise EmptyPhraseError(f"phrase {raw!r} is empty after normalization")
    return text


class Polarity(str, enum.Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    NEUTRAL = "neutral"
    CONFLICTING = "conflicting"

    @classmethod
    def parse(cls, value) -> "Polarity":
        if isinstance(value, Polarity):
            return value
        key = str(value).strip().lower()
        try:
            return _POLARITY_ALIASES[key]
        except KeyError:
            raise ValueError(f"unknown polarity {value!r}") from None

    def for_scoring(self, strict: bool = False) -> "Polarity":
        """Fold conflicting into neutral unless strict four-class scoring is on."""
        if self is Polarity.CONFLICTING and not strict:
            return Polarity.NEUTRAL
        return self

    def __str__(self) -> str:
        return self.value


_POLARITY_ALIASES = {
    "positive": Polarity.POSITIVE,
    "negative": Polarity.NEGATIVE,
    "neutral": Polarity.NEUTRAL,
    "conflicting": Polarity.CONFLICTING,
    "conflict": Polarity.CONFLICTING,
}

SCORING_CLASSES = (Polarity.POSITIVE, Polarity.NEGATIVE, Polarity.NEUTRAL)
STRICT_SCORING_CLASSES = SCORING_CLASSES + (Polarity.CONFLICTING,)


@dataclass(frozen=True)
class AspectPolarityPair:
    aspect: str
    polarity: Polarity
    key: str = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "polarity", Polarity.parse(self.polarity))
        object.__setattr__(self, "key", normalize_phrase(self.aspect))

    def __eq__(self, other):
        # equality for dedup is on the normalized phrase only
        if not isinstance(other, AspectPolarityPair):
            return NotImplemented
        return self.key == other.key

    def __hash__(self):
        return hash(self.key)


def dedupe_pairs(pairs: Iterable[AspectPolarityPair], *, context: str = "") -> tuple[AspectPolarityPair, ...]:
    """Merge pairs sharing a normalized phrase, keeping the first spelling.

    A repeated phrase with a different polarity is an annotation bug and
    raises ConflictingDuplicateAspectError.
    """
    seen: dict[str, AspectPolarityPair] = {}
    for pair in pairs:
        prev = seen.get(pair.key)
        if prev is None:
            seen[pair.key] = pair
        elif prev.polarity is not pair.polarity:
            where = f" in {context}" if context else ""
            raise ConflictingDuplicateAspectError(
                f"aspect {pair.key!r}{where} annotated as both "
                f"{prev.polarity.value} and {pair.polarity.value}"
            )
    return tuple(seen.values())


def _check_unique(pairs, what):
    keys = [p.key for p in pairs]
    if len(set(keys)) != len(keys):
        raise ConflictingDuplicateAspectError(f"{what} contains duplicate normalized aspects; use dedupe_pairs")


@dataclass(frozen=True)
class AnnotatedDocument:
    id: str
    text: str
    gold: tuple[AspectPolarityPair, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "gold", tuple(self.gold))
        _check_unique(self.gold, f"document {self.id!r}")

    @property
    def gold_phrases(self) -> list[str]:
        return [p.key for p in self.gold]


@dataclass(frozen=True)
class PredictionRecord:
    doc_id: str
    detected: tuple[AspectPolarityPair, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "detected", tuple(self.detected))
        _check_unique(self.detected, f"prediction {self.doc_id!r}")

    @property
    def detected_phrases(self) -> list[str]:
        return [p.key for p in self.detected]
