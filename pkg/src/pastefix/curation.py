"""Filter mined examples and assemble language-weighted training batches.

Filtering drops oversized pastes, oversized records, stale records, and
records whose provenance is not allowed. Batch assembly keeps a fixed
no-edit quota per batch and fills the remainder by weighted sampling over
languages, deterministically per seed.
"""
from __future__ import annotations

import math
import random
from bisect import bisect_left
from collections import Counter
from dataclasses import dataclass
from itertools import accumulate
from typing import Iterable, Mapping, Sequence

from .miner import LABEL_NO_EDIT, PROVENANCE_INTERNAL, PasteFixExample

MS_PER_DAY = 86_400_000

REJECT_PROVENANCE = "DisallowedProvenance"
REJECT_TOO_OLD = "TooOld"
REJECT_TOO_MANY_LINES = "TooManyPasteLines"
REJECT_TOO_LARGE = "TooLarge"


class AllZeroFrequencies(ValueError):
    """Every observed language frequency is zero (or the map is empty)."""


@dataclass(frozen=True)
class CurationPolicy:
    """Bounds a record must satisfy to enter the dataset."""

    max_paste_lines: int = 20
    max_example_chars: int = 50_000
    max_age_days: int = 120
    allowed_provenance: frozenset[str] = frozenset({PROVENANCE_INTERNAL})

    def __post_init__(self) -> None:
        for name in ("max_paste_lines", "max_example_chars", "max_age_days"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


def filter_example(
    example: PasteFixExample, policy: CurationPolicy, now: int
) -> str | None:
    """Return None to keep, or the first violated criterion's reason.

    Checked in order: provenance, age, paste lines, example characters.
    """
    if example.provenance not in policy.allowed_provenance:
        return REJECT_PROVENANCE
    if now - example.created_at > policy.max_age_days * MS_PER_DAY:
        return REJECT_TOO_OLD
    if example.region.line_count > policy.max_paste_lines:
        return REJECT_TOO_MANY_LINES
    if example.char_length > policy.max_example_chars:
        return REJECT_TOO_LARGE
    return None


def curate(
    examples: Iterable[PasteFixExample], policy: CurationPolicy, now: int
) -> tuple[list[PasteFixExample], Counter]:
    """Split a corpus into kept examples and a tally of rejection reasons."""
    kept: list[PasteFixExample] = []
    rejections: Counter = Counter()
    for example in examples:
        reason = filter_example(example, policy, now)
        if reason is None:
            kept.append(example)
        else:
            rejections[reason] += 1
    return kept, rejections


@dataclass(frozen=True)
class LanguageWeights:
    """Normalized sampling weights per language."""

    weights: Mapping[str, float]

    def __post_init__(self) -> None:
        if not self.weights:
            raise ValueError("weights must not be empty")
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("weights must be non-negative")
        total = sum(self.weights.values())
        if total <= 0:
            raise ValueError("at least one weight must be positive")
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"weights must sum to 1, got {total}")

    def sample(self, rng: random.Random, restrict_to: Sequence[str] | None = None) -> str:
        """Draw one language; optionally restricted (renormalized) to a subset."""
        items = sorted(self.weights.items())
        if restrict_to is not None:
            allowed = set(restrict_to)
            items = [(lang, w) for lang, w in items if lang in allowed]
            if not items:
                raise ValueError("no sampleable language in restriction")
        total = sum(w for _, w in items)
        if total <= 0:
            # Only zero-weight languages remain: fall back to uniform.
            return items[rng.randrange(len(items))][0]
        cumulative = list(accumulate(w for _, w in items))
        point = rng.random() * total
        return items[bisect_left(cumulative, point)][0]


def weight_languages(
    languages: Iterable[str], observed_frequencies: Mapping[str, float]
) -> LanguageWeights:
    """Weights proportional to observed paste frequency.

    ``languages`` supplies the universe (typically the languages present in
    the example stream); languages missing from the frequency map get
    weight zero.
    """
    if not observed_frequencies:
        raise AllZeroFrequencies("observed_frequencies is empty")
    universe = set(languages) | set(observed_frequencies)
    total = sum(observed_frequencies.values())
    if total <= 0:
        raise AllZeroFrequencies("all observed frequencies are zero")
    return LanguageWeights(
        {lang: observed_frequencies.get(lang, 0.0) / total for lang in sorted(universe)}
    )


@dataclass
class Batch:
    """One assembled training batch."""

    examples: list[PasteFixExample]
    size: int
    no_edit_shortfall: int = 0
    edit_shortfall: int = 0

    @property
    def is_full(self) -> bool:
        return len(self.examples) == self.size


def round_half_up(value: float) -> int:
    return int(math.floor(value + 0.5))


class _Pool:
    """Per-language shuffled queues drawn via weighted language choice."""

    def __init__(self, examples: Sequence[PasteFixExample], rng: random.Random):
        self._queues: dict[str, list[PasteFixExample]] = {}
        for example in examples:
            self._queues.setdefault(example.language, []).append(example)
        for language in sorted(self._queues):
            rng.shuffle(self._queues[language])

    def __len__(self) -> int:
        return sum(len(q) for q in self._queues.values())

    def draw(self, weights: LanguageWeights, rng: random.Random) -> PasteFixExample:
        available = sorted(lang for lang, q in self._queues.items() if q)
        if not available:
            raise IndexError("pool exhausted")
        sampleable = [lang for lang in available if weights.weights.get(lang, 0.0) > 0]
        if sampleable:
            language = weights.sample(rng, restrict_to=sampleable)
        else:
            language = available[rng.randrange(len(available))]
        return self._queues[language].pop()


def build_batches(
    examples: Sequence[PasteFixExample],
    batch_size: int,
    no_edit_fraction: float,
    weights: LanguageWeights,
    seed: int,
) -> list[Batch]:
    """Assemble batches with round-half-up no-edit quotas, deterministically.

    Full batches hold exactly ``round(batch_size * no_edit_fraction)``
    no-edit examples; a trailing batch that cannot meet its quotas records
    the shortfall per label.
    """
    if not examples:
        raise ValueError("no examples to batch")
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if not 0.0 <= no_edit_fraction <= 1.0:
        raise ValueError("no_edit_fraction must be within [0, 1]")

    rng = random.Random(seed)
    quota = round_half_up(batch_size * no_edit_fraction)
    no_edit_pool = _Pool([e for e in examples if e.label == LABEL_NO_EDIT], rng)
    edit_pool = _Pool([e for e in examples if e.label != LABEL_NO_EDIT], rng)

    batches: list[Batch] = []
    while len(no_edit_pool) + len(edit_pool) > 0:
        members: list[PasteFixExample] = []
        no_edit_missing = edit_missing = 0
        for _ in range(quota):
            if len(no_edit_pool) == 0:
                no_edit_missing += 1
                continue
            members.append(no_edit_pool.draw(weights, rng))
        for _ in range(batch_size - quota):
            if len(edit_pool) == 0:
                edit_missing += 1
                continue
            members.append(edit_pool.draw(weights, rng))
        if not members:
            break
        batches.append(
            Batch(
                examples=members,
                size=batch_size,
                no_edit_shortfall=no_edit_missing,
                edit_shortfall=edit_missing,
            )
        )
    return batches


def split_by_file_path(
    examples: Sequence[PasteFixExample], validation_fraction: float, seed: int
) -> tuple[list[PasteFixExample], list[PasteFixExample]]:
    """Train/validation split keeping every file path inside a single side."""
    if not 0.0 <= validation_fraction <= 1.0:
        raise ValueError("validation_fraction must be within [0, 1]")
    paths = sorted({e.file_path for e in examples})
    rng = random.Random(seed)
    rng.shuffle(paths)
    cut = round(len(paths) * validation_fraction)
    validation_paths = set(paths[:cut])
    train = [e for e in examples if e.file_path not in validation_paths]
    validation = [e for e in examples if e.file_path in validation_paths]
    return train, validation
