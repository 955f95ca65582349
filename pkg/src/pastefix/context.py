"""Select file lines for the model prompt under a token budget.

The selection seeds with the file's first line plus the paste region, then
grows one line per round through three pointers tried in strict priority
order: a header pointer walking down from line 1, a pre-paste pointer
walking up from just above the region, and a post-paste pointer walking
down from just below it. A pointer that lands on an already-selected or
over-budget line simply yields to the next pointer; the loop stops on the
first round that adds nothing.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

from .miner import PasteRegion

DEFAULT_TOKEN_BUDGET = 4096
DEFAULT_GAP_MARKER = "⋮"  # vertical ellipsis on its own line

Tokenizer = Callable[[str], int]


class RegionOutOfBounds(Exception):
    """The paste region does not fit inside the file's line range."""


def approx_line_tokens(line: str) -> int:
    """Deterministic per-line token estimate: ~4 characters per token, plus one."""
    return (len(line) + 3) // 4 + 1


@dataclass(frozen=True)
class ContextSelection:
    """The chosen line indices; empty when the seed alone exceeds the budget."""

    lines: frozenset[int]
    budget: int
    region: PasteRegion

    @property
    def is_empty(self) -> bool:
        return not self.lines

    def sorted_lines(self) -> list[int]:
        return sorted(self.lines)


def build_context(
    lines: Sequence[str],
    region: PasteRegion,
    budget: int = DEFAULT_TOKEN_BUDGET,
    tokenizer: Tokenizer = approx_line_tokens,
) -> ContextSelection:
    """Greedy header/pre/post expansion around the paste region."""
    n = len(lines)
    if region.end_line >= n:
        raise RegionOutOfBounds(f"region {region} exceeds file of {n} lines")
    if budget < 0:
        raise ValueError(f"budget must be non-negative, got {budget}")

    costs = [tokenizer(line) for line in lines]
    selected = {0}
    selected.update(range(region.start_line, region.end_line + 1))
    total = sum(costs[i] for i in selected)
    if total > budget:
        return ContextSelection(lines=frozenset(), budget=budget, region=region)

    header = 1
    pre = region.start_line - 1
    post = region.end_line + 1
    while True:
        if header < n and header not in selected and total + costs[header] <= budget:
            selected.add(header)
            total += costs[header]
            header += 1
        elif 0 <= pre and pre not in selected and total + costs[pre] <= budget:
            selected.add(pre)
            total += costs[pre]
            pre -= 1
        elif post < n and post not in selected and total + costs[post] <= budget:
            selected.add(post)
            total += costs[post]
            post += 1
        else:
            break
    return ContextSelection(lines=frozenset(selected), budget=budget, region=region)


def selection_cost(
    lines: Sequence[str], selection: ContextSelection, tokenizer: Tokenizer = approx_line_tokens
) -> int:
    return sum(tokenizer(lines[i]) for i in selection.lines)


def render_lines(
    lines: Sequence[str],
    selected: Sequence[int],
    gap_marker: str = DEFAULT_GAP_MARKER,
) -> list[str]:
    """Selected lines in file order, one marker line per maximal omitted run."""
    chosen = sorted(set(selected))
    out: list[str] = []
    previous = -1
    for index in chosen:
        if index > previous + 1:
            out.append(gap_marker)
        out.append(lines[index])
        previous = index
    if previous < len(lines) - 1:
        out.append(gap_marker)
    return out


def render_context(
    lines: Sequence[str],
    selection: ContextSelection,
    gap_marker: str = DEFAULT_GAP_MARKER,
) -> str:
    """Text form of a selection, gaps collapsed to single marker lines."""
    return "\n".join(render_lines(lines, selection.sorted_lines(), gap_marker))
