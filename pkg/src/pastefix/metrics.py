"""Online and offline evaluation metrics for paste-fix suggestions.

Online metrics are computed from suggestion telemetry events (shown /
accepted / dismissed); offline metrics grade model predictions against
ground-truth fixed regions. Character-level effort metrics are derived
from longest-common-subsequence alignments.
"""
from __future__ import annotations

import json
import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .miner import PasteRegion

LABEL_EDIT = "Edit"
LABEL_NO_EDIT = "NoEdit"

KIND_SHOWN = "Shown"
KIND_ACCEPTED = "Accepted"
KIND_DISMISSED = "Dismissed"

DEFAULT_LCS_WORK_CAP = 10**8


class InputTooLarge(Exception):
    """len(a) * len(b) exceeds the configured LCS work cap."""


@dataclass(frozen=True)
class SuggestionEvent:
    """One telemetry record; Shown/Accepted/Dismissed share an event_id per suggestion."""

    event_id: str
    kind: str
    timestamp: int
    region: PasteRegion
    before_text: str
    after_text: str | None = None
    latency_ms: float | None = None
    later_region_text: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in (KIND_SHOWN, KIND_ACCEPTED, KIND_DISMISSED):
            raise ValueError(f"unknown event kind {self.kind!r}")
        if (self.after_text is not None) != (self.kind == KIND_ACCEPTED):
            raise ValueError("after_text must be present exactly on Accepted events")


@dataclass(frozen=True)
class EvalRecord:
    """One offline test case: model prediction vs ground truth for a paste region."""

    example_id: str
    language: str
    predicted_region: tuple[str, ...]
    ground_truth_region: tuple[str, ...]
    ground_truth_label: str
    predicted_nonempty: bool


def lcs_length(a: str, b: str, work_cap: int = DEFAULT_LCS_WORK_CAP) -> int:
    """Length of the longest common subsequence of two character sequences.

    Uses the bit-vector formulation: one machine-word-parallel row update
    per character of ``b``, so the quadratic cell count stays affordable
    up to the work cap.
    """
    if len(a) * len(b) > work_cap:
        raise InputTooLarge(f"lcs work {len(a)}*{len(b)} exceeds cap {work_cap}")
    n = len(a)
    if n == 0 or len(b) == 0:
        return 0
    masks: dict[str, int] = {}
    for i, ch in enumerate(a):
        masks[ch] = masks.get(ch, 0) | (1 << i)
    mask = (1 << n) - 1
    v = mask
    for ch in b:
        p = masks.get(ch, 0)
        u = v & p
        v = ((v + u) | (v - u)) & mask
    return n - bin(v).count("1")


def chars_modified(before: str, after: str, work_cap: int = DEFAULT_LCS_WORK_CAP) -> int:
    """Characters changed between two texts: deletions plus insertions."""
    return len(before) + len(after) - 2 * lcs_length(before, after, work_cap)


def chars_added(before: str, after: str, work_cap: int = DEFAULT_LCS_WORK_CAP) -> int:
    """Characters of ``after`` that are new relative to ``before``."""
    return len(after) - lcs_length(before, after, work_cap)


def lcs_alignment(a: str, b: str, work_cap: int = DEFAULT_LCS_WORK_CAP) -> list[tuple[int, int]]:
    """One longest-common-subsequence alignment as (index-in-a, index-in-b) pairs.

    Ties are broken deterministically: the backtrack from the end prefers a
    diagonal match, then dropping from ``a``. Full-matrix DP, so the work
    cap matters more here than for lcs_length.
    """
    if len(a) * len(b) > work_cap:
        raise InputTooLarge(f"alignment work {len(a)}*{len(b)} exceeds cap {work_cap}")
    n, m = len(a), len(b)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        row = dp[i]
        prev = dp[i - 1]
        ca = a[i - 1]
        for j in range(1, m + 1):
            if ca == b[j - 1]:
                row[j] = prev[j - 1] + 1
            else:
                up = prev[j]
                left = row[j - 1]
                row[j] = up if up >= left else left
    pairs: list[tuple[int, int]] = []
    i, j = n, m
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1] and dp[i][j] == dp[i - 1][j - 1] + 1:
            pairs.append((i - 1, j - 1))
            i -= 1
            j -= 1
        elif dp[i - 1][j] >= dp[i][j - 1]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return pairs


def added_characters(before: str, after: str, work_cap: int = DEFAULT_LCS_WORK_CAP) -> str:
    """The subsequence of ``after`` not matched to ``before`` in the LCS alignment."""
    matched = {j for _, j in lcs_alignment(before, after, work_cap)}
    return "".join(ch for j, ch in enumerate(after) if j not in matched)


def survival(accepted: SuggestionEvent, later_region_text: str,
             work_cap: int = DEFAULT_LCS_WORK_CAP) -> float:
    """Fraction of a suggestion's added characters still present in later text.

    Added characters are identified by the before/after LCS alignment, then
    matched (as a subsequence) into the later region text. Defined as 1.0
    when the suggestion added nothing.
    """
    if accepted.kind != KIND_ACCEPTED:
        raise ValueError(f"survival needs an Accepted event, got {accepted.kind}")
    assert accepted.after_text is not None
    added = added_characters(accepted.before_text, accepted.after_text, work_cap)
    if not added:
        return 1.0
    return lcs_length(added, later_region_text, work_cap) / len(added)


def acceptance_rate(events: Iterable[SuggestionEvent]) -> float:
    """Accepted / shown; 0.0 when nothing was shown."""
    shown = accepted = 0
    for event in events:
        if event.kind == KIND_SHOWN:
            shown += 1
        elif event.kind == KIND_ACCEPTED:
            accepted += 1
    return accepted / shown if shown else 0.0


def exact_match(record: EvalRecord) -> bool:
    """Byte-exact equality of predicted and ground-truth region lines."""
    return tuple(record.predicted_region) == tuple(record.ground_truth_region)


def _char_ngrams(text: str, n: int) -> Counter:
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


def chrf(hypothesis: str, reference: str, max_n: int = 6, beta: float = 2.0) -> float:
    """Character n-gram F-score in [0, 100].

    Clipped precision and recall per order n are averaged over 1..max_n
    (orders where neither side has any n-gram are skipped) and combined as
    an F_beta. Whitespace counts like any other character: this grades code,
    where indentation is meaningful. Both inputs empty scores 100; exactly
    one empty scores 0.
    """
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    if not hypothesis and not reference:
        return 100.0
    if not hypothesis or not reference:
        return 0.0
    precisions: list[float] = []
    recalls: list[float] = []
    for n in range(1, max_n + 1):
        hyp = _char_ngrams(hypothesis, n)
        ref = _char_ngrams(reference, n)
        hyp_total = sum(hyp.values())
        ref_total = sum(ref.values())
        if hyp_total == 0 and ref_total == 0:
            continue
        overlap = sum((hyp & ref).values())
        precisions.append(overlap / hyp_total if hyp_total else 0.0)
        recalls.append(overlap / ref_total if ref_total else 0.0)
    if not precisions:
        return 0.0
    p = sum(precisions) / len(precisions)
    r = sum(recalls) / len(recalls)
    denom = beta * beta * p + r
    if denom == 0.0:
        return 0.0
    return 100.0 * (1 + beta * beta) * p * r / denom


@dataclass
class LanguageReport:
    """Offline metrics for one language (percent scales for accuracy)."""

    language: str
    records: int
    edit_records: int
    no_edit_records: int
    edit_exact_pct: float | None
    no_edit_exact_pct: float | None
    overall_exact_pct: float
    recall: float | None
    median_chrf: float | None


@dataclass
class OfflineReport:
    """Per-language rows plus an overall row over all records."""

    languages: list[LanguageReport]
    overall: LanguageReport


def _report_row(language: str, records: Sequence[EvalRecord]) -> LanguageReport:
    edits = [r for r in records if r.ground_truth_label == LABEL_EDIT]
    no_edits = [r for r in records if r.ground_truth_label == LABEL_NO_EDIT]
    matches = [exact_match(r) for r in records]
    edit_matches = [exact_match(r) for r in edits]
    no_edit_matches = [exact_match(r) for r in no_edits]
    misses = [
        chrf("\n".join(r.predicted_region), "\n".join(r.ground_truth_region))
        for r, ok in zip(records, matches)
        if not ok
    ]
    return LanguageReport(
        language=language,
        records=len(records),
        edit_records=len(edits),
        no_edit_records=len(no_edits),
        edit_exact_pct=100.0 * sum(edit_matches) / len(edits) if edits else None,
        no_edit_exact_pct=100.0 * sum(no_edit_matches) / len(no_edits) if no_edits else None,
        overall_exact_pct=100.0 * sum(matches) / len(records),
        recall=sum(1 for r in edits if r.predicted_nonempty) / len(edits) if edits else None,
        median_chrf=statistics.median(misses) if misses else None,
    )


def offline_report(records: Sequence[EvalRecord]) -> OfflineReport:
    """Exact match, recall, and near-miss chrF, per language and overall."""
    if not records:
        raise ValueError("offline_report needs at least one record")
    by_language: dict[str, list[EvalRecord]] = {}
    for record in records:
        by_language.setdefault(record.language, []).append(record)
    rows = [_report_row(lang, recs) for lang, recs in sorted(by_language.items())]
    return OfflineReport(languages=rows, overall=_report_row("overall", records))


def _fmt(value: float | None, digits: int = 1) -> str:
    return "-" if value is None else f"{value:.{digits}f}"


def format_offline_report(report: OfflineReport) -> str:
    """Human-readable table: one row per language plus the overall row."""
    header = f"{'language':<16} {'n':>6} {'edit':>6} {'noedit':>6} {'overall':>7} {'recall':>6} {'chrf':>6}"
    lines = [header, "-" * len(header)]
    for row in report.languages + [report.overall]:
        lines.append(
            f"{row.language:<16} {row.records:>6} {_fmt(row.edit_exact_pct):>6} "
            f"{_fmt(row.no_edit_exact_pct):>6} {_fmt(row.overall_exact_pct):>7} "
            f"{_fmt(100 * row.recall if row.recall is not None else None):>6} "
            f"{_fmt(row.median_chrf):>6}"
        )
    return "\n".join(lines)


@dataclass
class OnlineReport:
    """Aggregates over a telemetry event stream."""

    shown: int
    accepted: int
    dismissed: int
    acceptance_rate: float
    avg_chars_modified: float | None
    avg_chars_added: float | None
    mean_survival: float | None
    median_latency_ms: float | None
    throughput_qps: float | None
    counts: Counter = field(default_factory=Counter)


def online_report(events: Sequence[SuggestionEvent]) -> OnlineReport:
    """Acceptance, per-acceptance character effort, survival, latency, throughput."""
    shown = [e for e in events if e.kind == KIND_SHOWN]
    accepted = [e for e in events if e.kind == KIND_ACCEPTED]
    dismissed = [e for e in events if e.kind == KIND_DISMISSED]

    modified = [chars_modified(e.before_text, e.after_text or "") for e in accepted]
    added = [chars_added(e.before_text, e.after_text or "") for e in accepted]
    survivals = [
        survival(e, e.later_region_text) for e in accepted if e.later_region_text is not None
    ]
    latencies = sorted(e.latency_ms for e in shown if e.latency_ms is not None)

    throughput = None
    stamps = sorted(e.timestamp for e in shown)
    if len(stamps) >= 2 and stamps[-1] > stamps[0]:
        throughput = 1000.0 * (len(stamps) - 1) / (stamps[-1] - stamps[0])

    return OnlineReport(
        shown=len(shown),
        accepted=len(accepted),
        dismissed=len(dismissed),
        acceptance_rate=len(accepted) / len(shown) if shown else 0.0,
        avg_chars_modified=sum(modified) / len(modified) if modified else None,
        avg_chars_added=sum(added) / len(added) if added else None,
        mean_survival=sum(survivals) / len(survivals) if survivals else None,
        median_latency_ms=statistics.median(latencies) if latencies else None,
        throughput_qps=throughput,
        counts=Counter(e.kind for e in events),
    )


def eval_record_to_record(record: EvalRecord) -> dict:
    return {
        "example_id": record.example_id,
        "language": record.language,
        "predicted_region": list(record.predicted_region),
        "ground_truth_region": list(record.ground_truth_region),
        "ground_truth_label": record.ground_truth_label,
        "predicted_nonempty": record.predicted_nonempty,
    }


def eval_record_from_record(obj: Mapping) -> EvalRecord:
    return EvalRecord(
        example_id=str(obj["example_id"]),
        language=str(obj["language"]),
        predicted_region=tuple(str(l) for l in obj["predicted_region"]),
        ground_truth_region=tuple(str(l) for l in obj["ground_truth_region"]),
        ground_truth_label=str(obj["ground_truth_label"]),
        predicted_nonempty=bool(obj["predicted_nonempty"]),
    )


def read_eval_records(lines: Iterable[str]) -> tuple[list[EvalRecord], int]:
    """Parse newline-delimited eval records; malformed lines are skipped and counted."""
    records: list[EvalRecord] = []
    skipped = 0
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            records.append(eval_record_from_record(json.loads(line)))
        except (ValueError, KeyError, TypeError):
            skipped += 1
    return records, skipped


def event_to_record(event: SuggestionEvent) -> dict:
    record = {
        "event_id": event.event_id,
        "kind": event.kind,
        "timestamp": event.timestamp,
        "region": {"start_line": event.region.start_line, "end_line": event.region.end_line},
        "before_text": event.before_text,
        "latency_ms": event.latency_ms,
    }
    if event.after_text is not None:
        record["after_text"] = event.after_text
    if event.later_region_text is not None:
        record["later_region_text"] = event.later_region_text
    return record


def event_from_record(obj: Mapping) -> SuggestionEvent:
    region = obj["region"]
    return SuggestionEvent(
        event_id=str(obj["event_id"]),
        kind=str(obj["kind"]),
        timestamp=int(obj["timestamp"]),
        region=PasteRegion(int(region["start_line"]), int(region["end_line"])),
        before_text=str(obj["before_text"]),
        after_text=None if obj.get("after_text") is None else str(obj["after_text"]),
        latency_ms=None if obj.get("latency_ms") is None else float(obj["latency_ms"]),
        later_region_text=(
            None if obj.get("later_region_text") is None else str(obj["later_region_text"])
        ),
    )


def read_events(lines: Iterable[str]) -> tuple[list[SuggestionEvent], int]:
    """Parse newline-delimited telemetry; malformed lines are skipped and counted."""
    events: list[SuggestionEvent] = []
    skipped = 0
    for line in lines:
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            if obj.get("kind") not in (KIND_SHOWN, KIND_ACCEPTED, KIND_DISMISSED):
                skipped += 1
                continue
            events.append(event_from_record(obj))
        except (ValueError, KeyError, TypeError):
            skipped += 1
    return events, skipped
