"""Keystroke-level edit logs: snapshots, deltas, and file-content replay.

An edit journal for one file is a time-ordered sequence of full-content
snapshots and character-level deltas. Replay reconstructs the file text at
any event index; later snapshots act as checkpoints and replay restarts
from the nearest one.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Union


class JournalError(Exception):
    """Base class for edit-journal errors."""


class RangeOutOfBounds(JournalError):
    """A delta's [start_offset, start_offset + deleted_length) range does not fit the content."""

    def __init__(self, message: str, event_index: int | None = None):
        super().__init__(message)
        self.event_index = event_index


class MalformedJourney(JournalError):
    """The journey violates a structural invariant (e.g. does not begin with a snapshot)."""


def _normalize_newlines(text: str) -> str:
    return text.replace("\r\n", "\n").replace("\r", "\n")


@dataclass(frozen=True)
class FileSnapshot:
    """Full file content captured at one point in time."""

    journey_id: str
    file_path: str
    language: str
    timestamp: int
    content: str

    def __post_init__(self) -> None:
        if self.timestamp < 0:
            raise ValueError(f"snapshot timestamp must be non-negative, got {self.timestamp}")


@dataclass(frozen=True)
class EditDelta:
    """One splice: delete ``deleted_length`` chars at ``start_offset``, insert ``inserted_text``."""

    journey_id: str
    timestamp: int
    start_offset: int
    deleted_length: int
    inserted_text: str

    def __post_init__(self) -> None:
        if self.timestamp < 0:
            raise ValueError(f"delta timestamp must be non-negative, got {self.timestamp}")
        if self.start_offset < 0:
            raise ValueError(f"start_offset must be non-negative, got {self.start_offset}")
        if self.deleted_length < 0:
            raise ValueError(f"deleted_length must be non-negative, got {self.deleted_length}")
        if self.deleted_length == 0 and not self.inserted_text:
            raise ValueError("no-op delta: deletes nothing and inserts nothing")


JournalEvent = Union[FileSnapshot, EditDelta]


@dataclass
class EditJourney:
    """All events for one file, sorted by timestamp (ties keep ingest order)."""

    journey_id: str
    file_path: str
    language: str
    events: list[JournalEvent] = field(default_factory=list)


@dataclass(frozen=True)
class Violation:
    """One consistency failure found by validate_journey."""

    event_index: int
    kind: str
    detail: str = ""


def apply_delta(content: str, delta: EditDelta) -> str:
    """Splice one delta into ``content``."""
    end = delta.start_offset + delta.deleted_length
    if end > len(content):
        raise RangeOutOfBounds(
            f"delta range [{delta.start_offset}, {end}) exceeds content length {len(content)}"
        )
    return content[: delta.start_offset] + delta.inserted_text + content[end:]


def replay_deltas(content: str, deltas: Iterable[EditDelta]) -> str:
    """Apply deltas in order; equivalent to folding apply_delta."""
    for delta in deltas:
        content = apply_delta(content, delta)
    return content


def reconstruct(journey: EditJourney, upto: int) -> str:
    """Return the file content after the event at index ``upto``.

    Replays from the most recent snapshot at or before ``upto``; a snapshot
    index returns that snapshot's content verbatim.
    """
    events = journey.events
    if not 0 <= upto < len(events):
        raise IndexError(f"event index {upto} out of range for {len(events)} events")
    if not events or not isinstance(events[0], FileSnapshot):
        raise MalformedJourney(f"journey {journey.journey_id!r} does not begin with a snapshot")

    base = 0
    for i in range(upto, -1, -1):
        if isinstance(events[i], FileSnapshot):
            base = i
            break
    content = events[base].content
    for i in range(base + 1, upto + 1):
        event = events[i]
        assert isinstance(event, EditDelta)
        try:
            content = apply_delta(content, event)
        except RangeOutOfBounds as exc:
            raise RangeOutOfBounds(str(exc), event_index=i) from None
    return content


def validate_journey(journey: EditJourney) -> list[Violation]:
    """Replay the whole journey and report every inconsistency as data.

    A delta that does not fit the replayed content is reported and skipped;
    a snapshot that disagrees with the replayed content is reported and then
    adopted as the new checkpoint.
    """
    violations: list[Violation] = []
    events = journey.events
    if not events:
        return [Violation(0, "empty_journey")]
    if not isinstance(events[0], FileSnapshot):
        return [Violation(0, "no_leading_snapshot")]

    content = events[0].content
    for i, event in enumerate(events[1:], 1):
        if isinstance(event, FileSnapshot):
            if event.content != content:
                violations.append(Violation(i, "snapshot_mismatch"))
            content = event.content
        else:
            try:
                content = apply_delta(content, event)
            except RangeOutOfBounds as exc:
                violations.append(Violation(i, "delta_out_of_range", str(exc)))
    return violations


_SNAPSHOT_FIELDS = ("journey_id", "file_path", "language", "timestamp", "content")
_DELTA_FIELDS = ("journey_id", "timestamp", "start_offset", "deleted_length", "inserted_text")


def _parse_record(obj: dict) -> JournalEvent:
    kind = obj.get("kind")
    if kind == "snapshot":
        return FileSnapshot(
            journey_id=str(obj["journey_id"]),
            file_path=str(obj["file_path"]),
            language=str(obj["language"]),
            timestamp=int(obj["timestamp"]),
            content=_normalize_newlines(str(obj["content"])),
        )
    if kind == "delta":
        return EditDelta(
            journey_id=str(obj["journey_id"]),
            timestamp=int(obj["timestamp"]),
            start_offset=int(obj["start_offset"]),
            deleted_length=int(obj["deleted_length"]),
            inserted_text=_normalize_newlines(str(obj["inserted_text"])),
        )
    raise ValueError(f"unknown record kind {kind!r}")


def read_journeys(lines: Iterable[str]) -> tuple[list[EditJourney], int]:
    """Parse newline-delimited snapshot/delta records into journeys.

    Malformed lines (bad JSON, missing fields, no-op deltas, negative
    timestamps) are skipped and counted. Events are grouped by journey_id
    and stably sorted by timestamp; journeys come back in first-seen order.
    """
    by_id: dict[str, list[JournalEvent]] = {}
    skipped = 0
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            event = _parse_record(json.loads(line))
        except (ValueError, KeyError, TypeError):
            skipped += 1
            continue
        by_id.setdefault(event.journey_id, []).append(event)

    journeys = []
    for journey_id, events in by_id.items():
        events.sort(key=lambda e: e.timestamp)  # stable: ties keep ingest order
        first_snapshot = next((e for e in events if isinstance(e, FileSnapshot)), None)
        journeys.append(
            EditJourney(
                journey_id=journey_id,
                file_path=first_snapshot.file_path if first_snapshot else "",
                language=first_snapshot.language if first_snapshot else "",
                events=events,
            )
        )
    return journeys, skipped


def event_to_record(event: JournalEvent) -> dict:
    """Wire form of one event (inverse of the ingest parser)."""
    if isinstance(event, FileSnapshot):
        record = {"kind": "snapshot"}
        record.update({name: getattr(event, name) for name in _SNAPSHOT_FIELDS})
    else:
        record = {"kind": "delta"}
        record.update({name: getattr(event, name) for name in _DELTA_FIELDS})
    return record


def write_journeys(journeys: Iterable[EditJourney]) -> Iterator[str]:
    """Serialize journeys back to newline-delimited records."""
    for journey in journeys:
        for event in journey.events:
            yield json.dumps(event_to_record(event), ensure_ascii=False)
