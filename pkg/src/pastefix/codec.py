"""Prompt encoding and the delimiter-anchored patch format.

The model sees a task prefix, budgeted context, and the pasted lines
wrapped in delimiter tokens; it answers with a compact unified-diff-style
patch whose hunk offsets are relative to the first pasted line, so no
absolute file line numbers are needed. An empty patch means "no edit".
"""
from __future__ import annotations

import posixpath
import re
from dataclasses import dataclass
from typing import Sequence

from .context import DEFAULT_GAP_MARKER, ContextSelection, render_lines
from .miner import PasteFixExample, PasteRegion


class CodecError(Exception):
    """Base class for prompt/patch codec errors."""


class MalformedHunkHeader(CodecError):
    """Expected a "@@ <start> @@" header line."""


class UnknownLinePrefix(CodecError):
    """A line's prefix is not valid at its position in the patch."""


class OverlappingHunks(CodecError):
    """Hunks are unordered or their removed ranges overlap."""


class EmptyHunk(CodecError):
    """A hunk carries neither removed nor added lines."""


class ContextMismatch(CodecError):
    """A hunk's removed lines disagree with the region being patched."""

    def __init__(self, message: str, hunk_index: int):
        super().__init__(message)
        self.hunk_index = hunk_index


class HunkOutOfRange(CodecError):
    """A hunk addresses lines beyond the region."""


class DelimiterCollision(CodecError):
    """Pasted content contains a delimiter or marker token."""


_HUNK_HEADER = re.compile(r"^@@ (\d+) @@$")


@dataclass(frozen=True)
class Hunk:
    """One replacement: ``removed`` lines at ``start`` become ``added`` lines.

    ``start`` is a 0-based offset relative to the first pasted line.
    """

    start: int
    removed: tuple[str, ...] = ()
    added: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.start < 0:
            raise ValueError(f"hunk start must be non-negative, got {self.start}")
        if not self.removed and not self.added:
            raise EmptyHunk(f"hunk at {self.start} removes and adds nothing")
        if any("\n" in line for line in self.removed + self.added):
            raise ValueError("hunk lines must not contain newlines")


@dataclass(frozen=True)
class EditPatch:
    """An ordered, non-overlapping sequence of hunks; no hunks means no edit."""

    hunks: tuple[Hunk, ...] = ()

    def __post_init__(self) -> None:
        floor = None
        for hunk in self.hunks:
            if floor is not None and hunk.start < floor:
                raise OverlappingHunks(
                    f"hunk at {hunk.start} overlaps the previous hunk ending at {floor}"
                )
            floor = hunk.start + len(hunk.removed)

    @property
    def is_no_edit(self) -> bool:
        return not self.hunks

    @staticmethod
    def no_edit() -> EditPatch:
        return EditPatch(())


def render_patch(patch: EditPatch) -> str:
    """Wire form: "@@ <start> @@" then "-" lines then "+" lines, per hunk."""
    parts: list[str] = []
    for hunk in patch.hunks:
        parts.append(f"@@ {hunk.start} @@\n")
        parts.extend(f"-{line}\n" for line in hunk.removed)
        parts.extend(f"+{line}\n" for line in hunk.added)
    return "".join(parts)


def parse_patch(text: str) -> EditPatch:
    """Parse wire text; empty or whitespace-only input is the no-edit patch."""
    if not text.strip():
        return EditPatch.no_edit()
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()  # trailing newline is canonical, not an empty trailing line

    hunks: list[Hunk] = []
    index = 0
    while index < len(lines):
        header = _HUNK_HEADER.match(lines[index])
        if not header:
            raise MalformedHunkHeader(f"line {index + 1}: expected hunk header, got {lines[index]!r}")
        start = int(header.group(1))
        index += 1
        removed: list[str] = []
        added: list[str] = []
        while index < len(lines) and lines[index].startswith("-"):
            removed.append(lines[index][1:])
            index += 1
        while index < len(lines) and lines[index].startswith("+"):
            added.append(lines[index][1:])
            index += 1
        if index < len(lines) and not _HUNK_HEADER.match(lines[index]):
            raise UnknownLinePrefix(f"line {index + 1}: unexpected {lines[index]!r}")
        if not removed and not added:
            raise EmptyHunk(f"hunk at {start} has no change lines")
        hunks.append(Hunk(start=start, removed=tuple(removed), added=tuple(added)))
    return EditPatch(tuple(hunks))


def apply_patch(pasted_lines: Sequence[str], patch: EditPatch) -> list[str]:
    """Apply a patch to the region's lines; hunks apply last-to-first."""
    result = list(pasted_lines)
    for hunk in patch.hunks:
        if hunk.start + len(hunk.removed) > len(pasted_lines) or hunk.start > len(pasted_lines):
            raise HunkOutOfRange(
                f"hunk at {hunk.start} (+{len(hunk.removed)}) exceeds {len(pasted_lines)} region lines"
            )
    for index in range(len(patch.hunks) - 1, -1, -1):
        hunk = patch.hunks[index]
        window = tuple(pasted_lines[hunk.start : hunk.start + len(hunk.removed)])
        if window != hunk.removed:
            raise ContextMismatch(
                f"hunk {index} removed lines disagree with the region", hunk_index=index
            )
        result[hunk.start : hunk.start + len(hunk.removed)] = hunk.added
    return result


def diff_region(before_lines: Sequence[str], after_lines: Sequence[str]) -> EditPatch:
    """Minimal line diff (longest-common-subsequence based) as an EditPatch."""
    n, m = len(before_lines), len(after_lines)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row = dp[i]
        nxt = dp[i + 1]
        bi = before_lines[i]
        for j in range(m - 1, -1, -1):
            if bi == after_lines[j]:
                row[j] = nxt[j + 1] + 1
            else:
                down = nxt[j]
                right = row[j + 1]
                row[j] = down if down >= right else right

    # Walk the tables: matching equal heads is always optimal for an LCS,
    # so unmatched stretches between matches become one hunk each.
    hunks: list[Hunk] = []
    i = j = 0
    while i < n or j < m:
        if i < n and j < m and before_lines[i] == after_lines[j]:
            i += 1
            j += 1
            continue
        start = i
        removed: list[str] = []
        added: list[str] = []
        while i < n or j < m:
            if i < n and j < m and before_lines[i] == after_lines[j]:
                break
            if j >= m or (i < n and dp[i + 1][j] >= dp[i][j + 1]):
                removed.append(before_lines[i])
                i += 1
            else:
                added.append(after_lines[j])
                j += 1
        hunks.append(Hunk(start=start, removed=tuple(removed), added=tuple(added)))
    return EditPatch(tuple(hunks))


@dataclass(frozen=True)
class CodecConfig:
    """Delimiter spellings, markers, and prompt scaffolding."""

    open_delimiter: str = "<|paste_start|>"
    close_delimiter: str = "<|paste_end|>"
    fix_marker: str = "<|fix|>"
    task_prefix: str = "paste"
    gap_marker: str = DEFAULT_GAP_MARKER

    def marker_tokens(self) -> tuple[str, ...]:
        return (self.open_delimiter, self.close_delimiter, self.fix_marker)


@dataclass(frozen=True)
class PromptSpec:
    """Structured prompt parts, rendered top to bottom."""

    task_prefix: str
    pre_context: str
    pasted_lines: tuple[str, ...]
    post_context: str
    open_delimiter: str
    close_delimiter: str
    fix_marker: str


def build_prompt_spec(
    lines: Sequence[str],
    region: PasteRegion,
    file_name: str,
    selection: ContextSelection,
    config: CodecConfig = CodecConfig(),
) -> PromptSpec:
    """Assemble the prompt parts for a paste at ``region`` under ``selection``."""
    pasted = tuple(lines[region.start_line : region.end_line + 1])
    if not pasted:
        raise ValueError("region selects no lines")
    for token in config.marker_tokens():
        if any(token in line for line in pasted):
            raise DelimiterCollision(f"pasted content contains marker token {token!r}")

    pre_indices = [i for i in selection.sorted_lines() if i < region.start_line]
    post_indices = [i - region.end_line - 1 for i in selection.sorted_lines() if i > region.end_line]
    pre_context = "\n".join(render_lines(lines[: region.start_line], pre_indices, config.gap_marker))
    post_context = "\n".join(
        render_lines(lines[region.end_line + 1 :], post_indices, config.gap_marker)
    )
    prefix = config.task_prefix if not file_name else f"{config.task_prefix} {posixpath.basename(file_name)}"
    return PromptSpec(
        task_prefix=prefix,
        pre_context=pre_context,
        pasted_lines=pasted,
        post_context=post_context,
        open_delimiter=config.open_delimiter,
        close_delimiter=config.close_delimiter,
        fix_marker=config.fix_marker,
    )


def render_prompt(spec: PromptSpec) -> str:
    """Flatten a PromptSpec to the text the model consumes."""
    parts = [spec.task_prefix]
    if spec.pre_context:
        parts.append(spec.pre_context)
    parts.append(spec.open_delimiter)
    parts.extend(spec.pasted_lines)
    parts.append(spec.close_delimiter)
    if spec.post_context:
        parts.append(spec.post_context)
    parts.append(spec.fix_marker)
    return "\n".join(parts)


def encode_prompt(
    example: PasteFixExample,
    selection: ContextSelection,
    config: CodecConfig = CodecConfig(),
) -> str:
    """Prompt text for a mined example (file state right after the paste)."""
    lines = example.file_after_paste.split("\n")
    spec = build_prompt_spec(lines, example.region, example.file_path, selection, config)
    return render_prompt(spec)
