"""Mine paste-and-fix training examples from edit journeys.

A paste candidate is a bulk insert; its fix is the chain of follow-up edits
that start inside the (continuously re-tracked) pasted line range. Tracking
stops at the first unrelated edit, except for edits that only touch import
lines, which commonly land outside the pasted block.
"""
from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

from .journal import EditDelta, EditJourney, FileSnapshot, apply_delta, validate_journey

LABEL_EDIT = "Edit"
LABEL_NO_EDIT = "NoEdit"

PROVENANCE_INTERNAL = "Internal"
PROVENANCE_THIRD_PARTY = "ThirdParty"
PROVENANCE_UNKNOWN = "Unknown"

DISCARD_FULL_DELETION = "FullDeletion"

# Line-start patterns (after indentation) that mark dependency declarations.
DEFAULT_IMPORT_PATTERNS: Mapping[str, tuple[str, ...]] = {
    "python": (r"import\s", r"from\s"),
    "go": (r"import\s", r"import\s*\($", r'"[\w./-]+"$'),
    "java": (r"import\s",),
    "kotlin": (r"import\s",),
    "scala": (r"import\s",),
    "javascript": (r"import\s", r"const\s.+=\s*require\("),
    "typescript": (r"import\s", r"const\s.+=\s*require\("),
    "c": (r"#\s*include\b",),
    "cpp": (r"#\s*include\b",),
    "rust": (r"use\s",),
    "": (r"import\s", r"from\s", r"#\s*include\b", r"use\s", r"require\b"),
}


class RegionDestroyed(Exception):
    """An edit deleted every character of the tracked paste region."""


@dataclass(frozen=True)
class PasteRegion:
    """Inclusive 0-based line range occupied by a pasted snippet."""

    start_line: int
    end_line: int

    def __post_init__(self) -> None:
        if self.start_line < 0:
            raise ValueError(f"start_line must be non-negative, got {self.start_line}")
        if self.end_line < self.start_line:
            raise ValueError(f"end_line {self.end_line} precedes start_line {self.start_line}")

    @property
    def line_count(self) -> int:
        return self.end_line - self.start_line + 1


@dataclass(frozen=True)
class MinerConfig:
    """Thresholds for candidate detection and fix tracking."""

    min_candidate_chars: int = 10
    max_candidate_lines: int = 5
    import_patterns: Mapping[str, tuple[str, ...]] = field(
        default_factory=lambda: dict(DEFAULT_IMPORT_PATTERNS)
    )
    idle_cutoff_ms: int | None = None
    provenance: str = PROVENANCE_INTERNAL

    def __post_init__(self) -> None:
        if self.min_candidate_chars < 1:
            raise ValueError("min_candidate_chars must be >= 1")
        if self.max_candidate_lines < 1:
            raise ValueError("max_candidate_lines must be >= 1")


@dataclass(frozen=True)
class PasteCandidate:
    """A bulk insert that looks like a paste, plus the file states around it."""

    journey_id: str
    event_index: int
    region: PasteRegion
    pasted_text: str
    file_before: str
    file_after_paste: str


@dataclass(frozen=True)
class PasteFixExample:
    """One mined training/eval record: the paste and its final local fix."""

    journey_id: str
    language: str
    file_path: str
    file_after_paste: str
    region: PasteRegion
    pasted_text: str
    fixed_region_text: str
    label: str
    created_at: int
    char_length: int
    provenance: str = PROVENANCE_UNKNOWN


@dataclass
class MiningStats:
    """Mergeable counters for one mining run."""

    journeys: int = 0
    candidates: int = 0
    edit_examples: int = 0
    no_edit_examples: int = 0
    discarded: int = 0
    journey_errors: int = 0
    discard_reasons: Counter = field(default_factory=Counter)

    def merge(self, other: MiningStats) -> MiningStats:
        return MiningStats(
            journeys=self.journeys + other.journeys,
            candidates=self.candidates + other.candidates,
            edit_examples=self.edit_examples + other.edit_examples,
            no_edit_examples=self.no_edit_examples + other.no_edit_examples,
            discarded=self.discarded + other.discarded,
            journey_errors=self.journey_errors + other.journey_errors,
            discard_reasons=self.discard_reasons + other.discard_reasons,
        )

    @property
    def edit_fraction(self) -> float | None:
        emitted = self.edit_examples + self.no_edit_examples
        return self.edit_examples / emitted if emitted else None

    def summary(self) -> str:
        fraction = self.edit_fraction
        fixed = "-" if fraction is None else f"{100 * fraction:.1f}%"
        return (
            f"journeys={self.journeys} candidates={self.candidates} "
            f"edit={self.edit_examples} no_edit={self.no_edit_examples} "
            f"discarded={self.discarded} errors={self.journey_errors} "
            f"locally_fixed={fixed}"
        )


def line_of_offset(text: str, offset: int) -> int:
    """0-based line index containing ``offset``; a newline belongs to the line it ends."""
    return text.count("\n", 0, offset)


def line_start_offset(text: str, line: int) -> int:
    pos = 0
    for _ in range(line):
        nl = text.find("\n", pos)
        if nl < 0:
            raise IndexError(f"line {line} out of range")
        pos = nl + 1
    return pos


def line_end_offset(text: str, line: int) -> int:
    """Offset one past the last content character of ``line`` (its newline or EOF)."""
    start = line_start_offset(text, line)
    nl = text.find("\n", start)
    return len(text) if nl < 0 else nl


def region_text(content: str, region: PasteRegion) -> str:
    """The text of the region's lines, without the trailing newline."""
    return content[line_start_offset(content, region.start_line) : line_end_offset(content, region.end_line)]


def _non_blank_lines(text: str) -> list[str]:
    return [line for line in text.split("\n") if line.strip()]


def detect_paste_candidates(journey: EditJourney, config: MinerConfig) -> list[PasteCandidate]:
    """Every delta that inserts enough characters over 1..max non-blank lines."""
    candidates: list[PasteCandidate] = []
    content = ""
    for index, event in enumerate(journey.events):
        if isinstance(event, FileSnapshot):
            content = event.content
            continue
        before = content
        content = apply_delta(content, event)
        inserted = event.inserted_text
        if len(inserted) < config.min_candidate_chars:
            continue
        if not 1 <= len(_non_blank_lines(inserted)) <= config.max_candidate_lines:
            continue
        start_line = line_of_offset(content, event.start_offset)
        end_line = line_of_offset(content, event.start_offset + len(inserted) - 1)
        candidates.append(
            PasteCandidate(
                journey_id=journey.journey_id,
                event_index=index,
                region=PasteRegion(start_line, end_line),
                pasted_text=inserted,
                file_before=before,
                file_after_paste=content,
            )
        )
    return candidates


def adjust_region(region: PasteRegion, delta: EditDelta, content: str) -> PasteRegion:
    """Re-address a line region after a delta lands in ``content``.

    Edits strictly above shift both bounds by the net newline change; edits
    strictly below leave the region alone; overlapping edits grow or shrink
    it. Deleting every character of the region (with nothing inserted)
    raises RegionDestroyed.
    """
    a = delta.start_offset
    if a + delta.deleted_length > len(content):
        raise ValueError("delta does not fit content")
    start_hit = line_of_offset(content, a)
    end_hit = line_of_offset(content, a + delta.deleted_length)
    inserted_newlines = delta.inserted_text.count("\n")
    net = inserted_newlines - (end_hit - start_hit)

    if start_hit > region.end_line:
        return region
    if end_hit < region.start_line:
        return PasteRegion(region.start_line + net, region.end_line + net)

    region_start = line_start_offset(content, region.start_line)
    region_end = line_end_offset(content, region.end_line)
    if not delta.inserted_text and a <= region_start and a + delta.deleted_length >= region_end:
        raise RegionDestroyed(f"delta deleted the whole region {region}")

    new_start = min(start_hit, region.start_line)
    if end_hit >= region.end_line:
        new_end = start_hit + inserted_newlines
    else:
        new_end = region.end_line + net
    return PasteRegion(new_start, max(new_start, new_end))


class _ImportMatcher:
    """Per-language compiled line patterns (anchored after leading whitespace)."""

    def __init__(self, patterns: Mapping[str, Sequence[str]]):
        self._compiled = {
            lang: [re.compile(p) for p in pats] for lang, pats in patterns.items()
        }

    def _patterns_for(self, language: str) -> list[re.Pattern]:
        key = language.lower()
        if key in self._compiled:
            return self._compiled[key]
        return self._compiled.get("", [])

    def line_matches(self, line: str, language: str) -> bool:
        stripped = line.lstrip()
        return any(p.match(stripped) for p in self._patterns_for(language))

    def is_import_edit(self, content: str, delta: EditDelta, language: str) -> bool:
        """True when the edit only adds import lines or only touches import lines.

        Either every non-blank inserted line is an import (new imports pasted
        at a line boundary), or every non-blank line of the block the delta
        leaves behind is one (editing an existing import line in place).
        """
        inserted_lines = _non_blank_lines(delta.inserted_text)
        if inserted_lines and all(self.line_matches(line, language) for line in inserted_lines):
            return True
        after = apply_delta(content, delta)
        first = line_of_offset(content, delta.start_offset)
        last = first + delta.inserted_text.count("\n")
        block = after[
            line_start_offset(after, first) : line_end_offset(
                after, min(last, line_of_offset(after, len(after)))
            )
        ]
        block_lines = _non_blank_lines(block)
        return bool(block_lines) and all(
            self.line_matches(line, language) for line in block_lines
        )


def _make_example(
    journey: EditJourney,
    candidate: PasteCandidate,
    fixed_region_text: str,
    label: str,
    created_at: int,
    provenance: str,
) -> PasteFixExample:
    return PasteFixExample(
        journey_id=journey.journey_id,
        language=journey.language,
        file_path=journey.file_path,
        file_after_paste=candidate.file_after_paste,
        region=candidate.region,
        pasted_text=candidate.pasted_text,
        fixed_region_text=fixed_region_text,
        label=label,
        created_at=created_at,
        char_length=len(candidate.file_after_paste) + len(fixed_region_text),
        provenance=provenance,
    )


def track_fix(
    journey: EditJourney,
    candidate: PasteCandidate,
    config: MinerConfig,
    stop_event_index: int | None = None,
) -> PasteFixExample:
    """Follow edits after a paste until an unrelated edit (or the journey) ends it.

    The emitted example captures the region text as of the last related
    edit; with no related edit it is a no-edit example. ``stop_event_index``
    lets the caller cut tracking short when a later paste begins.
    """
    matcher = _ImportMatcher(config.import_patterns)
    content = candidate.file_after_paste
    region = candidate.region
    created_at = journey.events[candidate.event_index].timestamp
    last_edit_ts = created_at
    fixed_text = region_text(content, region)
    label = LABEL_NO_EDIT

    for index in range(candidate.event_index + 1, len(journey.events)):
        if stop_event_index is not None and index >= stop_event_index:
            break
        event = journey.events[index]
        if isinstance(event, FileSnapshot):
            content = event.content
            continue
        if (
            config.idle_cutoff_ms is not None
            and event.timestamp - last_edit_ts > config.idle_cutoff_ms
        ):
            break
        edit_line = line_of_offset(content, event.start_offset)
        if region.start_line <= edit_line <= region.end_line:
            region = adjust_region(region, event, content)
            content = apply_delta(content, event)
            fixed_text = region_text(content, region)
            label = LABEL_EDIT
            last_edit_ts = event.timestamp
        elif matcher.is_import_edit(content, event, journey.language):
            region = adjust_region(region, event, content)
            content = apply_delta(content, event)
            last_edit_ts = event.timestamp
        else:
            break

    # Defensive: an in-region edit chain can leave text identical to the paste.
    if label == LABEL_EDIT and fixed_text == region_text(
        candidate.file_after_paste, candidate.region
    ):
        label = LABEL_NO_EDIT
    return _make_example(journey, candidate, fixed_text, label, created_at, config.provenance)


def mine_journey(
    journey: EditJourney, config: MinerConfig
) -> tuple[list[PasteFixExample], MiningStats]:
    """Validate, then detect and track every candidate in one journey."""
    stats = MiningStats(journeys=1)
    examples: list[PasteFixExample] = []
    if validate_journey(journey):
        stats.journey_errors += 1
        return examples, stats
    try:
        candidates = detect_paste_candidates(journey, config)
    except Exception:
        stats.journey_errors += 1
        return examples, stats
    stats.candidates = len(candidates)
    for position, candidate in enumerate(candidates):
        stop = (
            candidates[position + 1].event_index
            if position + 1 < len(candidates)
            else None
        )
        try:
            example = track_fix(journey, candidate, config, stop_event_index=stop)
        except RegionDestroyed:
            stats.discarded += 1
            stats.discard_reasons[DISCARD_FULL_DELETION] += 1
            continue
        except Exception:
            stats.journey_errors += 1
            continue
        examples.append(example)
        if example.label == LABEL_EDIT:
            stats.edit_examples += 1
        else:
            stats.no_edit_examples += 1
    return examples, stats


def mine(
    journeys: Iterable[EditJourney], config: MinerConfig
) -> tuple[list[PasteFixExample], MiningStats]:
    """Mine a whole corpus; per-journey failures are counted, never fatal."""
    stats = MiningStats()
    out: list[PasteFixExample] = []
    for journey in journeys:
        examples, journey_stats = mine_journey(journey, config)
        out.extend(examples)
        stats = stats.merge(journey_stats)
    return out, stats


def example_to_record(example: PasteFixExample) -> dict:
    return {
        "journey_id": example.journey_id,
        "language": example.language,
        "file_path": example.file_path,
        "file_after_paste": example.file_after_paste,
        "region": {
            "start_line": example.region.start_line,
            "end_line": example.region.end_line,
        },
        "pasted_text": example.pasted_text,
        "fixed_region_text": example.fixed_region_text,
        "label": example.label,
        "created_at": example.created_at,
        "char_length": example.char_length,
        "provenance": example.provenance,
    }


def example_from_record(obj: Mapping) -> PasteFixExample:
    region = obj["region"]
    return PasteFixExample(
        journey_id=str(obj["journey_id"]),
        language=str(obj["language"]),
        file_path=str(obj["file_path"]),
        file_after_paste=str(obj["file_after_paste"]),
        region=PasteRegion(int(region["start_line"]), int(region["end_line"])),
        pasted_text=str(obj["pasted_text"]),
        fixed_region_text=str(obj["fixed_region_text"]),
        label=str(obj["label"]),
        created_at=int(obj["created_at"]),
        char_length=int(obj["char_length"]),
        provenance=str(obj.get("provenance", PROVENANCE_UNKNOWN)),
    )


def read_examples(lines: Iterable[str]) -> tuple[list[PasteFixExample], int]:
    """Parse newline-delimited example records; summary records ("kind") are ignored."""
    examples: list[PasteFixExample] = []
    skipped = 0
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            if "kind" in obj:
                continue
            examples.append(example_from_record(obj))
        except (ValueError, KeyError, TypeError):
            skipped += 1
    return examples, skipped


def write_examples(examples: Iterable[PasteFixExample]) -> Iterator[str]:
    for example in examples:
        yield json.dumps(example_to_record(example), ensure_ascii=False)
