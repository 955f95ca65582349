"""Produce post-paste edit suggestions through a pluggable model backend.

The engine builds the budgeted prompt, queries the backend, parses its
patch, and post-processes: no-edit and invalid outputs are suppressed
silently (counted, never surfaced to the paste flow), an optional score
threshold gates low-confidence output, and suggestions that would delete
the entire pasted block are dropped while partial deletions pass through.
"""
from __future__ import annotations

import hashlib
import json
import math
import threading
import time
import urllib.error
import urllib.request
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Protocol

from .codec import CodecConfig, CodecError, EditPatch, apply_patch, build_prompt_spec, parse_patch, render_prompt
from .context import RegionOutOfBounds, Tokenizer, approx_line_tokens, build_context
from .miner import PasteRegion


class BackendUnavailable(Exception):
    """Transport or timeout failure: infrastructure broke, not "no suggestion"."""


class MalformedResponse(Exception):
    """The remote backend answered with something that is not the wire format."""


@dataclass(frozen=True)
class BackendResult:
    """Raw model output plus how long the backend took."""

    patch_text: str
    score: float | None
    backend_latency_ms: float


class ModelBackend(Protocol):
    """Anything that turns a prompt into patch text."""

    def predict(self, prompt: str) -> BackendResult:  # pragma: no cover - protocol
        ...


def prompt_fingerprint(prompt: str) -> str:
    """Stable identifier used to script backend responses per prompt."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ScriptedBackend:
    """Deterministic test double: fingerprint-keyed canned patches.

    Unmatched prompts get ``default_patch`` (empty text = no edit), so an
    empty script is an always-no-edit backend and a bare ``default_patch``
    is a constant backend.
    """

    def __init__(
        self,
        script: Mapping[str, str] | None = None,
        default_patch: str = "",
        score: float = 0.0,
    ):
        self._script = dict(script or {})
        self._default = default_patch
        self._score = score

    def predict(self, prompt: str) -> BackendResult:
        patch_text = self._script.get(prompt_fingerprint(prompt), self._default)
        return BackendResult(patch_text=patch_text, score=self._score, backend_latency_ms=0.0)


class RemoteBackend:
    """HTTP backend: POST {"prompt"} to an endpoint, read {"patch_text", "score"}."""

    def __init__(self, endpoint: str, timeout_ms: float = 2000.0):
        self.endpoint = endpoint
        self.timeout_ms = timeout_ms

    def predict(self, prompt: str) -> BackendResult:
        body = json.dumps({"prompt": prompt}).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint, data=body, headers={"Content-Type": "application/json"}
        )
        started = time.perf_counter()
        try:
            with urllib.request.urlopen(request, timeout=self.timeout_ms / 1000.0) as response:
                raw = response.read()
        except (urllib.error.URLError, TimeoutError, OSError) as exc:
            raise BackendUnavailable(f"backend {self.endpoint} unreachable: {exc}") from exc
        elapsed_ms = (time.perf_counter() - started) * 1000.0
        try:
            payload = json.loads(raw.decode("utf-8"))
            patch_text = payload["patch_text"]
            score = payload.get("score")
        except (ValueError, KeyError, TypeError) as exc:
            raise MalformedResponse(f"bad backend response: {exc}") from exc
        if not isinstance(patch_text, str) or not (score is None or isinstance(score, (int, float))):
            raise MalformedResponse("patch_text must be text and score numeric or null")
        return BackendResult(
            patch_text=patch_text,
            score=None if score is None else float(score),
            backend_latency_ms=elapsed_ms,
        )


@dataclass(frozen=True)
class EngineConfig:
    """Post-processing and prompt-construction knobs."""

    score_threshold: float | None = None
    suppress_full_deletion: bool = True
    token_budget: int = 4096
    codec: CodecConfig = field(default_factory=CodecConfig)
    tokenizer: Tokenizer = approx_line_tokens

    def __post_init__(self) -> None:
        if self.score_threshold is not None and not math.isfinite(self.score_threshold):
            raise ValueError("score_threshold must be finite when set")


@dataclass(frozen=True)
class Suggestion:
    """A renderable edit for the pasted region."""

    patch: EditPatch
    preview_region_lines: tuple[str, ...]
    score: float | None
    model_latency_ms: float
    engine_latency_ms: float


@dataclass(frozen=True)
class EngineResult:
    """Suggestion (or why there is none) plus the latency split."""

    suggestion: Suggestion | None
    model_latency_ms: float
    engine_latency_ms: float
    suppressed_reason: str | None = None


class SuggestionEngine:
    """Stateless per-request pipeline with shared suppression counters."""

    def __init__(self, backend: ModelBackend, config: EngineConfig | None = None):
        self.backend = backend
        self.config = config or EngineConfig()
        self._lock = threading.Lock()
        self._counters: Counter = Counter()

    @property
    def counters(self) -> Counter:
        with self._lock:
            return Counter(self._counters)

    def _count(self, reason: str) -> None:
        with self._lock:
            self._counters[reason] += 1

    def _suppress(self, reason: str, model_ms: float, started: float) -> EngineResult:
        self._count(reason)
        engine_ms = (time.perf_counter() - started) * 1000.0 - model_ms
        return EngineResult(
            suggestion=None,
            model_latency_ms=model_ms,
            engine_latency_ms=max(engine_ms, 0.0),
            suppressed_reason=reason,
        )

    def suggest_detailed(
        self,
        file_after_paste: str,
        region: PasteRegion,
        language: str,
        file_name: str = "",
    ) -> EngineResult:
        started = time.perf_counter()
        config = self.config
        lines = file_after_paste.split("\n")
        if region.end_line >= len(lines):
            raise RegionOutOfBounds(f"region {region} exceeds file of {len(lines)} lines")

        selection = build_context(lines, region, config.token_budget, config.tokenizer)
        if selection.is_empty:
            return self._suppress("context_overflow", 0.0, started)
        try:
            prompt = render_prompt(
                build_prompt_spec(lines, region, file_name, selection, config.codec)
            )
        except CodecError:
            return self._suppress("delimiter_collision", 0.0, started)

        result = self.backend.predict(prompt)  # BackendUnavailable propagates
        model_ms = result.backend_latency_ms

        try:
            patch = parse_patch(result.patch_text)
        except CodecError:
            return self._suppress("parse_failure", model_ms, started)
        if patch.is_no_edit:
            return self._suppress("no_edit", model_ms, started)
        if (
            config.score_threshold is not None
            and result.score is not None
            and result.score < config.score_threshold
        ):
            return self._suppress("below_threshold", model_ms, started)

        region_lines = lines[region.start_line : region.end_line + 1]
        try:
            preview = apply_patch(region_lines, patch)
        except CodecError:
            return self._suppress("invalid_patch", model_ms, started)
        if config.suppress_full_deletion and not preview:
            return self._suppress("full_deletion", model_ms, started)

        self._count("suggested")
        engine_ms = max((time.perf_counter() - started) * 1000.0 - model_ms, 0.0)
        return EngineResult(
            suggestion=Suggestion(
                patch=patch,
                preview_region_lines=tuple(preview),
                score=result.score,
                model_latency_ms=model_ms,
                engine_latency_ms=engine_ms,
            ),
            model_latency_ms=model_ms,
            engine_latency_ms=engine_ms,
        )

    def suggest(
        self,
        file_after_paste: str,
        region: PasteRegion,
        language: str,
        file_name: str = "",
    ) -> Suggestion | None:
        return self.suggest_detailed(file_after_paste, region, language, file_name).suggestion


def suggest(
    file_after_paste: str,
    region: PasteRegion,
    language: str,
    backend: ModelBackend,
    config: EngineConfig | None = None,
    file_name: str = "",
) -> Suggestion | None:
    """One-shot convenience around SuggestionEngine."""
    return SuggestionEngine(backend, config).suggest(file_after_paste, region, language, file_name)
