"""Paste candidate detection, region tracking, and fix mining."""
from __future__ import annotations

import random

import pytest

from pastefix.journal import EditDelta, EditJourney, FileSnapshot
from pastefix.miner import (
    LABEL_EDIT,
    LABEL_NO_EDIT,
    MinerConfig,
    PasteRegion,
    RegionDestroyed,
    adjust_region,
    detect_paste_candidates,
    line_of_offset,
    mine,
    mine_journey,
    read_examples,
    region_text,
    track_fix,
    write_examples,
)

CONFIG = MinerConfig()


def journey_of(content: str, *deltas: EditDelta, language: str = "python") -> EditJourney:
    events = [FileSnapshot("j", "f.py", language, 0, content), *deltas]
    return EditJourney("j", "f.py", language, events)


def delta(offset: int, deleted: int, inserted: str, ts: int = 1) -> EditDelta:
    return EditDelta("j", ts, offset, deleted, inserted)


def adjust_region_oracle(region: PasteRegion, d: EditDelta, content: str):
    """Splice-and-resplit simulation: the affected block is located by
    rebuilding both line lists explicitly instead of counting newlines.
    """
    old_lines = content.split("\n")
    new_content = content[: d.start_offset] + d.inserted_text + content[d.start_offset + d.deleted_length :]
    new_lines = new_content.split("\n")

    starts = []
    pos = 0
    for line in old_lines:
        starts.append(pos)
        pos += len(line) + 1
    first_hit = max(i for i, s in enumerate(starts) if s <= d.start_offset)
    last_hit = max(i for i, s in enumerate(starts) if s <= d.start_offset + d.deleted_length)
    block_last = len(new_lines) - 1 - (len(old_lines) - 1 - last_hit)

    if first_hit > region.end_line:
        return region
    if last_hit < region.start_line:
        shift = block_last - last_hit
        return PasteRegion(region.start_line + shift, region.end_line + shift)
    region_start_off = starts[region.start_line]
    region_end_off = starts[region.end_line] + len(old_lines[region.end_line])
    if (
        not d.inserted_text
        and d.start_offset <= region_start_off
        and d.start_offset + d.deleted_length >= region_end_off
    ):
        return "destroyed"
    new_start = min(first_hit, region.start_line)
    if last_hit >= region.end_line:
        new_end = block_last
    else:
        new_end = region.end_line + (block_last - last_hit)
    return PasteRegion(new_start, max(new_start, new_end))


class TestDetect:
    def test_single_char_typing_yields_nothing(self):
        deltas = [delta(i, 0, "x", ts=i + 1) for i in range(8)]
        journey = journey_of("", *deltas)
        assert detect_paste_candidates(journey, CONFIG) == []

    def test_three_line_insert_is_candidate(self):
        pasted = "alpha line\nbeta line\ngamma line\n"
        journey = journey_of("top\nbottom", delta(4, 0, pasted))
        candidates = detect_paste_candidates(journey, CONFIG)
        assert len(candidates) == 1
        candidate = candidates[0]
        assert candidate.region == PasteRegion(1, 3)
        assert candidate.pasted_text == pasted
        assert candidate.file_after_paste == "top\nalpha line\nbeta line\ngamma line\nbottom"

    def test_six_nonblank_lines_exceeds_max(self):
        pasted = "\n".join(f"line {i}" for i in range(6)) + "\n"
        journey = journey_of("", delta(0, 0, pasted))
        assert detect_paste_candidates(journey, CONFIG) == []

    def test_blank_lines_do_not_count(self):
        pasted = "one\n\n\ntwo\n\n\nthree long\n"
        journey = journey_of("", delta(0, 0, pasted))
        assert len(detect_paste_candidates(journey, CONFIG)) == 1

    def test_char_threshold(self):
        journey = journey_of("", delta(0, 0, "tiny"))
        assert detect_paste_candidates(journey, CONFIG) == []
        journey = journey_of("", delta(0, 0, "0123456789"))
        assert len(detect_paste_candidates(journey, CONFIG)) == 1

    def test_replace_delta_is_candidate(self):
        journey = journey_of("old text here", delta(0, 8, "new pasted text"))
        candidates = detect_paste_candidates(journey, CONFIG)
        assert len(candidates) == 1
        assert candidates[0].file_before == "old text here"

    def test_no_shared_trigger_index(self):
        journey = journey_of(
            "", delta(0, 0, "first paste\n"), delta(0, 0, "second paste\n", ts=2)
        )
        candidates = detect_paste_candidates(journey, CONFIG)
        indices = [c.event_index for c in candidates]
        assert len(indices) == len(set(indices)) == 2


class TestAdjustRegion:
    def test_delta_below_region_unchanged(self):
        content = "a\nb\nc\nd"
        region = PasteRegion(1, 2)
        assert adjust_region(region, delta(6, 1, "zz"), content) == region

    def test_delta_above_region_shifts(self):
        content = "a\nb\nc\nd"
        region = PasteRegion(2, 3)
        moved = adjust_region(region, delta(0, 0, "x\ny\n"), content)
        assert moved == PasteRegion(4, 5)

    def test_deletion_above_region_shifts_up(self):
        content = "a\nb\nc\nd"
        region = PasteRegion(2, 3)
        moved = adjust_region(region, delta(0, 2, ""), content)
        assert moved == PasteRegion(1, 2)

    def test_insertion_inside_grows(self):
        content = "a\nb\nc\nd"
        region = PasteRegion(1, 2)
        grown = adjust_region(region, delta(2, 0, "new\n"), content)
        assert grown == PasteRegion(1, 3)

    def test_deletion_of_whole_region_raises(self):
        content = "a\nb\nc\nd"
        region = PasteRegion(1, 2)
        with pytest.raises(RegionDestroyed):
            adjust_region(region, delta(2, 4, ""), content)

    def test_matches_splice_oracle(self):
        rng = random.Random(404)
        alphabet = "ab\nc"
        for _ in range(4000):
            content = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 30)))
            line_count = content.count("\n") + 1
            start = rng.randrange(line_count)
            end = rng.randint(start, line_count - 1)
            region = PasteRegion(start, end)
            offset = rng.randint(0, len(content))
            deleted = rng.randint(0, len(content) - offset)
            inserted = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
            if deleted == 0 and not inserted:
                inserted = "q"
            d = delta(offset, deleted, inserted)
            expected = adjust_region_oracle(region, d, content)
            if expected == "destroyed":
                with pytest.raises(RegionDestroyed):
                    adjust_region(region, d, content)
            else:
                assert adjust_region(region, d, content) == expected, (content, region, d)


def paste_then(content: str, pasted: str, offset: int, *followups: EditDelta,
                language: str = "python") -> tuple[EditJourney, MinerConfig]:
    journey = journey_of(content, delta(offset, 0, pasted), *followups, language=language)
    return journey, CONFIG


class TestTrackFix:
    def test_in_region_edit_then_unrelated(self):
        content = "top\nbottom"
        pasted = "middle one\nmiddle two\n"
        journey, config = paste_then(
            content, pasted, 4,
            delta(4 + 7, 3, "NEW", ts=2),          # inside region: "middle one" -> "middle NEW"
            delta(0, 3, "TOP", ts=3),              # unrelated: line 0
            delta(4 + 7 + 3, 0, "ignored", ts=4),  # after termination: must not count
        )
        candidate = detect_paste_candidates(journey, config)[0]
        example = track_fix(journey, candidate, config)
        assert example.label == LABEL_EDIT
        assert example.fixed_region_text == "middle NEW\nmiddle two"

    def test_immediate_unrelated_edit_is_no_edit(self):
        journey, config = paste_then("top\nbottom", "pasted line\n", 4, delta(0, 1, "T", ts=2))
        candidate = detect_paste_candidates(journey, config)[0]
        example = track_fix(journey, candidate, config)
        assert example.label == LABEL_NO_EDIT
        assert example.fixed_region_text == "pasted line"

    def test_import_edit_does_not_terminate(self):
        content = "import os\n\ndef f():\n    pass\n"
        pasted = "    value = load()\n"
        paste_at = content.index("    pass")
        imp = delta(0, 0, "import sys\n", ts=2)
        journey = journey_of(content, delta(paste_at, 0, pasted), imp, language="python")
        candidate = detect_paste_candidates(journey, CONFIG)[0]
        # in-region fix after the import edit; region has shifted down one line
        fixed_journey = journey_of(
            content,
            delta(paste_at, 0, pasted),
            imp,
            delta(len("import sys\n") + paste_at + 4, 5, "thing", ts=3),
            language="python",
        )
        example = track_fix(fixed_journey, detect_paste_candidates(fixed_journey, CONFIG)[0], CONFIG)
        assert example.label == LABEL_EDIT
        assert "thing" in example.fixed_region_text

    def test_non_import_outside_edit_terminates(self):
        content = "import os\n\ndef f():\n    pass\n"
        pasted = "    value = load()\n"
        paste_at = content.index("    pass")
        journey = journey_of(
            content,
            delta(paste_at, 0, pasted),
            delta(0, 0, "x = 5\n", ts=2),  # outside, not an import
            delta(len("x = 5\n") + paste_at + 4, 5, "thing", ts=3),
            language="python",
        )
        example = track_fix(journey, detect_paste_candidates(journey, CONFIG)[0], CONFIG)
        assert example.label == LABEL_NO_EDIT

    def test_editing_existing_import_line_is_exception(self):
        content = "import o\n\npayload here\n"
        pasted = "pasted body line\n"
        journey = journey_of(
            content,
            delta(len(content), 0, pasted),
            delta(8, 0, "s", ts=2),  # fix the import line: "import o" -> "import os"
            delta(len(content) + 1 + 7, 0, "X", ts=3),
            language="python",
        )
        example = track_fix(journey, detect_paste_candidates(journey, CONFIG)[0], CONFIG)
        assert example.label == LABEL_EDIT

    def test_full_region_deletion_raises(self):
        content = "keep\n"
        pasted = "doomed paste line\n"
        journey = journey_of(
            content,
            delta(5, 0, pasted),
            delta(5, len(pasted), "", ts=2),
        )
        candidate = detect_paste_candidates(journey, CONFIG)[0]
        with pytest.raises(RegionDestroyed):
            track_fix(journey, candidate, CONFIG)

    def test_idle_cutoff_stops_tracking(self):
        config = MinerConfig(idle_cutoff_ms=100)
        content = "top\nbottom"
        pasted = "pasted line\n"
        journey = journey_of(content, delta(4, 0, pasted), delta(4, 0, "late ", ts=500))
        candidate = detect_paste_candidates(journey, config)[0]
        example = track_fix(journey, candidate, config)
        assert example.label == LABEL_NO_EDIT

    def test_monotone_cutoff(self):
        # truncating events after the first unrelated edit changes nothing
        content = "top\nbottom"
        pasted = "one fine line\n"
        fixes = [delta(4 + 3, 0, "r", ts=2), delta(0, 1, "T", ts=3), delta(4, 0, "zz", ts=4)]
        full = journey_of(content, delta(4, 0, pasted), *fixes)
        truncated = journey_of(content, delta(4, 0, pasted), *fixes[:2])
        config = CONFIG
        full_example = track_fix(full, detect_paste_candidates(full, config)[0], config)
        cut_example = track_fix(truncated, detect_paste_candidates(truncated, config)[0], config)
        assert full_example == cut_example


class TestMine:
    def test_empty_stream(self):
        examples, stats = mine([], CONFIG)
        assert examples == []
        assert stats.journeys == 0
        assert stats.candidates == 0

    def test_all_unrelated_corpus_is_all_no_edit(self):
        journeys = []
        for i in range(20):
            journeys.append(
                EditJourney(
                    f"j{i}",
                    "f.py",
                    "python",
                    [
                        FileSnapshot(f"j{i}", "f.py", "python", 0, "head\ntail"),
                        EditDelta(f"j{i}", 1, 5, 0, "pasted body\n"),
                        EditDelta(f"j{i}", 2, 0, 1, "H"),
                    ],
                )
            )
        examples, stats = mine(journeys, CONFIG)
        assert len(examples) == 20
        assert all(e.label == LABEL_NO_EDIT for e in examples)
        assert stats.no_edit_examples == 20
        assert stats.edit_examples == 0

    def test_nested_paste_terminates_first(self):
        content = "a\nb\nc\nd\ne\nf"
        first = delta(0, 0, "first pasted\n", ts=1)
        second = delta(2, 0, "second pasted\n", ts=2)  # lands inside the first region
        journey = journey_of(content, first, second)
        examples, stats = mine_journey(journey, CONFIG)
        assert stats.candidates == 2
        assert len(examples) == 2
        # the nested paste is not folded into the first example as a fix
        assert all(e.label == LABEL_NO_EDIT for e in examples)
        assert examples[0].fixed_region_text == "first pasted"

    def test_label_soundness_fuzz(self):
        rng = random.Random(2718)
        alphabet = "abc \n"
        for _ in range(300):
            base = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 40)))
            pasted = "pasted alpha\npasted beta\n"
            offset = rng.randint(0, len(base))
            events = [delta(offset, 0, pasted)]
            content = base[:offset] + pasted + base[offset:]
            for ts in range(2, 2 + rng.randint(0, 5)):
                at = rng.randint(0, len(content))
                deleted = rng.randint(0, min(3, len(content) - at))
                inserted = "".join(rng.choice("xy") for _ in range(rng.randint(0, 4)))
                if deleted == 0 and not inserted:
                    inserted = "z"
                events.append(delta(at, deleted, inserted, ts=ts))
                content = content[:at] + inserted + content[at + deleted :]
            journey = journey_of(base, *events)
            examples, _ = mine_journey(journey, CONFIG)
            for example in examples:
                pasted_region = region_text(example.file_after_paste, example.region)
                if example.label == LABEL_NO_EDIT:
                    assert example.fixed_region_text == pasted_region
                else:
                    assert example.fixed_region_text != pasted_region

    def test_inconsistent_journey_counted_as_error(self):
        # a delta that does not fit the snapshot fails validation up front
        journey = journey_of("tiny", delta(999, 5, "pasted body text\n"))
        examples, stats = mine_journey(journey, CONFIG)
        assert examples == []
        assert stats.journey_errors == 1
        assert stats.candidates == 0

    def test_stats_merge_is_commutative(self):
        journeys = [
            journey_of("top\nbottom", delta(4, 0, "pasted body\n")),
            journey_of("x", delta(0, 0, "another paste\n")),
        ]
        _, stats_a = mine_journey(journeys[0], CONFIG)
        _, stats_b = mine_journey(journeys[1], CONFIG)
        merged_ab = stats_a.merge(stats_b)
        merged_ba = stats_b.merge(stats_a)
        assert merged_ab == merged_ba

    def test_example_record_round_trip(self):
        journey, config = paste_then("top\nbottom", "middle pasted\n", 4, delta(6, 0, "X", ts=2))
        examples, _ = mine_journey(journey, config)
        lines = list(write_examples(examples))
        parsed, skipped = read_examples(lines + ['{"kind": "mining_stats"}', "junk"])
        assert skipped == 1
        assert parsed == examples


class TestLineHelpers:
    def test_line_of_offset(self):
        text = "ab\ncd\nef"
        assert line_of_offset(text, 0) == 0
        assert line_of_offset(text, 2) == 0  # the newline belongs to line 0
        assert line_of_offset(text, 3) == 1
        assert line_of_offset(text, len(text)) == 2

    def test_region_text(self):
        text = "ab\ncd\nef"
        assert region_text(text, PasteRegion(1, 1)) == "cd"
        assert region_text(text, PasteRegion(0, 2)) == text
