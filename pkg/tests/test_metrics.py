"""Metric functions against independently written brute-force oracles."""
from __future__ import annotations

import random
from collections import Counter

import pytest

from pastefix.metrics import (
    EvalRecord,
    InputTooLarge,
    SuggestionEvent,
    acceptance_rate,
    added_characters,
    chars_added,
    chars_modified,
    chrf,
    exact_match,
    format_offline_report,
    lcs_alignment,
    lcs_length,
    offline_report,
    online_report,
    read_events,
    survival,
)
from pastefix.miner import PasteRegion

REGION = PasteRegion(0, 0)


# ---------------------------------------------------------------------------
# Oracles: quadratic DP and literal n-gram counting, written before and
# independently of the implementations they check.
# ---------------------------------------------------------------------------

def lcs_dp_oracle(a: str, b: str) -> int:
    dp = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                dp[i][j] = dp[i - 1][j - 1] + 1
            else:
                dp[i][j] = max(dp[i - 1][j], dp[i][j - 1])
    return dp[len(a)][len(b)]


def alignment_dp_oracle(a: str, b: str) -> list[tuple[int, int]]:
    """Full-matrix backtrack with the pinned tie rule: diagonal, then drop from a."""
    dp = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                dp[i][j] = dp[i - 1][j - 1] + 1
            else:
                dp[i][j] = max(dp[i - 1][j], dp[i][j - 1])
    pairs = []
    i, j = len(a), len(b)
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1] and dp[i][j] == dp[i - 1][j - 1] + 1:
            pairs.append((i - 1, j - 1))
            i, j = i - 1, j - 1
        elif dp[i - 1][j] >= dp[i][j - 1]:
            i -= 1
        else:
            j -= 1
    return pairs[::-1]


def chrf_oracle(hyp: str, ref: str, max_n: int = 6, beta: float = 2.0) -> float:
    if not hyp and not ref:
        return 100.0
    if not hyp or not ref:
        return 0.0
    precisions, recalls = [], []
    for n in range(1, max_n + 1):
        hyp_grams = [hyp[i : i + n] for i in range(len(hyp) - n + 1)]
        ref_grams = [ref[i : i + n] for i in range(len(ref) - n + 1)]
        if not hyp_grams and not ref_grams:
            continue
        overlap = sum((Counter(hyp_grams) & Counter(ref_grams)).values())
        precisions.append(overlap / len(hyp_grams) if hyp_grams else 0.0)
        recalls.append(overlap / len(ref_grams) if ref_grams else 0.0)
    if not precisions:
        return 0.0
    p = sum(precisions) / len(precisions)
    r = sum(recalls) / len(recalls)
    denominator = beta * beta * p + r
    return 0.0 if denominator == 0 else 100.0 * (1 + beta * beta) * p * r / denominator


def random_text(rng: random.Random, max_len: int = 30, alphabet: str = "abcd \n") -> str:
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, max_len)))


def accepted_event(before: str, after: str) -> SuggestionEvent:
    return SuggestionEvent("e1", "Accepted", 0, REGION, before, after_text=after)


class TestLcsLength:
    def test_identity(self):
        assert lcs_length("abc", "abc") == 3

    def test_disjoint(self):
        assert lcs_length("abc", "xyz") == 0

    def test_empty(self):
        assert lcs_length("", "abc") == 0
        assert lcs_length("", "") == 0

    def test_matches_dp_oracle(self):
        rng = random.Random(42)
        for _ in range(1000):
            a, b = random_text(rng), random_text(rng)
            assert lcs_length(a, b) == lcs_dp_oracle(a, b)

    def test_work_cap(self):
        with pytest.raises(InputTooLarge):
            lcs_length("a" * 100, "b" * 100, work_cap=100)


class TestCharsModified:
    def test_identity_is_zero(self):
        assert chars_modified("abc", "abc") == 0

    def test_pure_insertion(self):
        assert chars_modified("", "xy") == 2

    def test_single_substitution(self):
        assert chars_modified("abc", "abd") == 2  # oracle: lcs=2

    def test_properties(self):
        rng = random.Random(5)
        for _ in range(300):
            a, b = random_text(rng), random_text(rng)
            value = chars_modified(a, b)
            assert value == chars_modified(b, a)
            assert 0 <= value <= len(a) + len(b)
            assert chars_added(a, b) <= value


class TestCharsAdded:
    def test_identity(self):
        assert chars_added("abc", "abc") == 0

    def test_pure_insertion(self):
        assert chars_added("", "xy") == 2

    def test_matches_alignment_oracle(self):
        rng = random.Random(17)
        for _ in range(1000):
            a, b = random_text(rng), random_text(rng)
            matched = {j for _, j in alignment_dp_oracle(a, b)}
            unmatched = sum(1 for j in range(len(b)) if j not in matched)
            assert chars_added(a, b) == unmatched


class TestAlignment:
    def test_matches_oracle(self):
        rng = random.Random(29)
        for _ in range(500):
            a, b = random_text(rng, 20), random_text(rng, 20)
            assert lcs_alignment(a, b) == alignment_dp_oracle(a, b)

    def test_added_characters(self):
        assert added_characters("abc", "axbyc") == "xy"


class TestSurvival:
    def test_everything_survives(self):
        event = accepted_event("abc", "abxyc")
        assert survival(event, "abxyc") == 1.0

    def test_nothing_survives(self):
        event = accepted_event("abc", "abxyc")
        assert survival(event, "abc") == 0.0

    def test_half_survives(self):
        # before "ab" -> after "abxy": added chars are "xy"; later text keeps x only.
        event = accepted_event("ab", "abxy")
        assert survival(event, "abx") == 0.5

    def test_zero_added_is_full_survival(self):
        event = accepted_event("abc", "ab")  # pure deletion adds nothing
        assert survival(event, "zzz") == 1.0

    def test_requires_accepted(self):
        shown = SuggestionEvent("e", "Shown", 0, REGION, "a")
        with pytest.raises(ValueError):
            survival(shown, "a")

    def test_within_unit_interval_and_matches_oracle(self):
        rng = random.Random(61)
        for _ in range(1000):
            before, after = random_text(rng, 15), random_text(rng, 15)
            later = random_text(rng, 15)
            event = accepted_event(before, after)
            value = survival(event, later)
            assert 0.0 <= value <= 1.0
            matched = {j for _, j in alignment_dp_oracle(before, after)}
            added = "".join(ch for j, ch in enumerate(after) if j not in matched)
            expected = 1.0 if not added else lcs_dp_oracle(added, later) / len(added)
            assert value == expected


class TestAcceptanceRate:
    def test_zero_shown_is_zero(self):
        assert acceptance_rate([]) == 0.0

    def test_half(self):
        events = [
            SuggestionEvent("a", "Shown", 0, REGION, "x"),
            SuggestionEvent("b", "Shown", 1, REGION, "x"),
            SuggestionEvent("a", "Accepted", 2, REGION, "x", after_text="y"),
        ]
        assert acceptance_rate(events) == 0.5

    def test_planted_rate(self):
        rng = random.Random(99)
        events = []
        accepted = 0
        for i in range(2000):
            events.append(SuggestionEvent(str(i), "Shown", i, REGION, "x"))
            if rng.random() < 0.45:
                events.append(SuggestionEvent(str(i), "Accepted", i, REGION, "x", after_text="y"))
                accepted += 1
            else:
                events.append(SuggestionEvent(str(i), "Dismissed", i, REGION, "x"))
        assert acceptance_rate(events) == accepted / 2000


class TestExactMatch:
    def test_identical(self):
        record = EvalRecord("1", "py", ("a", "b"), ("a", "b"), "Edit", True)
        assert exact_match(record)

    def test_trailing_space_differs(self):
        record = EvalRecord("1", "py", ("a ", "b"), ("a", "b"), "Edit", True)
        assert not exact_match(record)

    def test_no_edit_passthrough(self):
        record = EvalRecord("1", "py", ("x",), ("x",), "NoEdit", False)
        assert exact_match(record)


class TestChrf:
    def test_identical_long(self):
        assert chrf("abcdef", "abcdef") == 100.0

    def test_disjoint(self):
        assert chrf("aaa", "bbb") == 0.0

    def test_both_empty(self):
        assert chrf("", "") == 100.0

    def test_one_empty(self):
        assert chrf("", "abc") == 0.0
        assert chrf("abc", "") == 0.0

    def test_fixed_pair_from_oracle(self):
        # frozen from the n-gram counting oracle
        value = chrf("def f(x): return x+1", "def f(y): return y+1")
        assert value == pytest.approx(64.07292741658067, abs=1e-9)

    def test_matches_oracle(self):
        rng = random.Random(77)
        for _ in range(1000):
            hyp = random_text(rng, 12, "abc ")
            ref = random_text(rng, 12, "abc ")
            assert chrf(hyp, ref) == pytest.approx(chrf_oracle(hyp, ref), abs=1e-9)

    def test_identity_scores_100_for_any_nonempty(self):
        rng = random.Random(78)
        for _ in range(200):
            text = random_text(rng, 10) or "a"
            assert chrf(text, text) == pytest.approx(100.0, abs=1e-9)

    def test_bounded(self):
        rng = random.Random(79)
        for _ in range(200):
            value = chrf(random_text(rng), random_text(rng))
            assert 0.0 <= value <= 100.0


def make_record(lang: str, label: str, predicted: tuple, truth: tuple) -> EvalRecord:
    return EvalRecord(
        example_id="x",
        language=lang,
        predicted_region=predicted,
        ground_truth_region=truth,
        ground_truth_label=label,
        predicted_nonempty=predicted != truth or label == "Edit",
    )


class TestOfflineReport:
    def test_all_exact(self):
        records = [make_record("py", "Edit", ("a",), ("a",)) for _ in range(3)]
        report = offline_report(records)
        assert report.overall.overall_exact_pct == 100.0
        assert report.overall.median_chrf is None

    def test_all_edit_predictions_empty_recall_zero(self):
        records = [
            EvalRecord("1", "py", ("same",), ("fixed",), "Edit", False) for _ in range(4)
        ]
        report = offline_report(records)
        assert report.overall.recall == 0.0

    def test_planted_per_language_values(self):
        records = []
        # go: 2 edit (1 correct), 2 no-edit (both correct) -> edit 50, noedit 100, overall 75
        records.append(EvalRecord("1", "go", ("ok",), ("ok",), "Edit", True))
        records.append(EvalRecord("2", "go", ("bad",), ("good",), "Edit", True))
        records.append(EvalRecord("3", "go", ("x",), ("x",), "NoEdit", False))
        records.append(EvalRecord("4", "go", ("y",), ("y",), "NoEdit", False))
        # py: 1 edit (incorrect, not predicted) -> edit 0, recall 0
        records.append(EvalRecord("5", "py", ("p",), ("q",), "Edit", False))
        report = offline_report(records)
        go = next(r for r in report.languages if r.language == "go")
        assert go.edit_exact_pct == 50.0
        assert go.no_edit_exact_pct == 100.0
        assert go.overall_exact_pct == 75.0
        assert go.recall == 1.0
        py = next(r for r in report.languages if r.language == "py")
        assert py.edit_exact_pct == 0.0
        assert py.no_edit_exact_pct is None
        assert py.recall == 0.0
        assert report.overall.records == 5
        assert report.overall.recall == 2 / 3

    def test_empty_input_raises(self):
        with pytest.raises(ValueError):
            offline_report([])

    def test_exact_match_implies_zero_chars_modified(self):
        record = make_record("py", "Edit", ("a", "b"), ("a", "b"))
        assert exact_match(record)
        assert chars_modified(
            "\n".join(record.predicted_region), "\n".join(record.ground_truth_region)
        ) == 0

    def test_format_has_overall_row(self):
        records = [make_record("py", "Edit", ("a",), ("a",))]
        table = format_offline_report(offline_report(records))
        assert "overall" in table and "py" in table


class TestOnlineReport:
    def test_counts_and_rates(self):
        events = [
            SuggestionEvent("1", "Shown", 0, REGION, "ab", latency_ms=300.0),
            SuggestionEvent("1", "Accepted", 100, REGION, "ab", after_text="abxy",
                            later_region_text="abx"),
            SuggestionEvent("2", "Shown", 1000, REGION, "cd", latency_ms=400.0),
            SuggestionEvent("2", "Dismissed", 1100, REGION, "cd"),
        ]
        report = online_report(events)
        assert report.shown == 2 and report.accepted == 1 and report.dismissed == 1
        assert report.acceptance_rate == 0.5
        assert report.avg_chars_modified == 2.0
        assert report.avg_chars_added == 2.0
        assert report.mean_survival == 0.5
        assert report.median_latency_ms == 350.0
        assert report.throughput_qps == 1.0

    def test_event_wire_round_trip(self):
        events = [
            SuggestionEvent("1", "Shown", 0, PasteRegion(2, 4), "ab", latency_ms=10.0),
            SuggestionEvent("1", "Accepted", 5, PasteRegion(2, 4), "ab", after_text="zz",
                            later_region_text="z"),
        ]
        import json

        from pastefix.metrics import event_to_record

        lines = [json.dumps(event_to_record(e)) for e in events]
        parsed, skipped = read_events(lines + ["garbage", json.dumps({"kind": "Other"})])
        assert skipped == 2
        assert parsed == events

    def test_eval_record_wire_round_trip(self):
        import json

        from pastefix.metrics import eval_record_to_record, read_eval_records

        records = [
            EvalRecord("e1", "py", ("a", "b"), ("a", "c"), "Edit", True),
            EvalRecord("e2", "go", ("x",), ("x",), "NoEdit", False),
        ]
        lines = [json.dumps(eval_record_to_record(r)) for r in records]
        parsed, skipped = read_eval_records(lines + ["not json"])
        assert skipped == 1
        assert parsed == records
