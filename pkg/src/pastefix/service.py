"""HTTP surface for the suggestion engine plus an append-only telemetry log.

Endpoints: POST /v1/suggest, POST /v1/telemetry, GET /v1/healthz. Bodies
are JSON with field names matching the domain types. CORS headers are open
so a browser playground can talk to the service directly.
"""
from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Mapping

from .codec import CodecConfig, render_patch
from .context import RegionOutOfBounds
from .engine import (
    BackendUnavailable,
    EngineConfig,
    ModelBackend,
    RemoteBackend,
    ScriptedBackend,
    SuggestionEngine,
)
from .metrics import KIND_ACCEPTED, KIND_DISMISSED, KIND_SHOWN
from .miner import PasteRegion


class BadRequest(Exception):
    """The request body is malformed or violates a field constraint."""


class UnknownRequest(Exception):
    """A terminal telemetry event references a request_id never issued."""


@dataclass(frozen=True)
class SuggestRequest:
    """One post-paste suggestion request."""

    file_path: str
    language: str
    content_after_paste: str
    region: PasteRegion
    request_id: str


@dataclass(frozen=True)
class SuggestResponse:
    """Engine answer; a null suggestion still carries the latency split."""

    suggestion: dict | None
    engine_latency_ms: float
    model_latency_ms: float
    request_id: str

    def to_json(self) -> dict:
        return {
            "suggestion": self.suggestion,
            "engine_latency_ms": self.engine_latency_ms,
            "model_latency_ms": self.model_latency_ms,
            "request_id": self.request_id,
        }


def parse_suggest_request(obj: Mapping) -> SuggestRequest:
    try:
        region = obj["region"]
        request = SuggestRequest(
            file_path=str(obj["file_path"]),
            language=str(obj["language"]),
            content_after_paste=str(obj["content_after_paste"]),
            region=PasteRegion(int(region["start_line"]), int(region["end_line"])),
            request_id=str(obj["request_id"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise BadRequest(f"malformed suggest request: {exc}") from exc
    line_count = request.content_after_paste.count("\n") + 1
    if request.region.end_line >= line_count:
        raise BadRequest(
            f"region {request.region} exceeds content of {line_count} lines"
        )
    return request


class TelemetrySink:
    """Append-only event log with serialized writes and per-request ordering."""

    def __init__(self, log_path: Path | None = None):
        self._lock = threading.Lock()
        self._events: list[dict] = []
        self._known_requests: set[str] = set()
        self._log_path = log_path
        if log_path is not None:
            log_path.parent.mkdir(parents=True, exist_ok=True)

    def register_request(self, request_id: str) -> None:
        with self._lock:
            self._known_requests.add(request_id)

    def append(self, event: dict) -> None:
        kind = event.get("kind")
        if kind not in (KIND_SHOWN, KIND_ACCEPTED, KIND_DISMISSED, "ShownCandidate"):
            raise BadRequest(f"unknown telemetry kind {kind!r}")
        event_id = str(event.get("event_id", ""))
        if not event_id:
            raise BadRequest("telemetry event needs an event_id")
        with self._lock:
            if kind in (KIND_ACCEPTED, KIND_DISMISSED) and event_id not in self._known_requests:
                raise UnknownRequest(f"no request {event_id!r} on record")
            if kind == KIND_SHOWN:
                self._known_requests.add(event_id)
            self._events.append(event)
            if self._log_path is not None:
                with self._log_path.open("a", encoding="utf-8") as handle:
                    handle.write(json.dumps(event, ensure_ascii=False) + "\n")

    def events(self) -> list[dict]:
        with self._lock:
            return list(self._events)


def handle_suggest(
    request: SuggestRequest, engine: SuggestionEngine, sink: TelemetrySink | None = None
) -> SuggestResponse:
    """Validate, run the engine, and stub the shown-candidate telemetry."""
    started = time.perf_counter()
    try:
        result = engine.suggest_detailed(
            request.content_after_paste,
            request.region,
            request.language,
            file_name=request.file_path,
        )
    except RegionOutOfBounds as exc:
        raise BadRequest(str(exc)) from exc
    suggestion = None
    if result.suggestion is not None:
        suggestion = {
            "patch_text": render_patch(result.suggestion.patch),
            "preview_region_lines": list(result.suggestion.preview_region_lines),
            "score": result.suggestion.score,
        }
        if sink is not None:
            sink.register_request(request.request_id)
            sink.append(
                {
                    "kind": "ShownCandidate",
                    "event_id": request.request_id,
                    "timestamp": int(time.time() * 1000),
                    "region": {
                        "start_line": request.region.start_line,
                        "end_line": request.region.end_line,
                    },
                }
            )
    engine_ms = (time.perf_counter() - started) * 1000.0 - result.model_latency_ms
    return SuggestResponse(
        suggestion=suggestion,
        engine_latency_ms=max(engine_ms, 0.0),
        model_latency_ms=result.model_latency_ms,
        request_id=request.request_id,
    )


def handle_telemetry(event: Mapping, sink: TelemetrySink) -> dict:
    """Persist one event; ack with the current log length."""
    sink.append(dict(event))
    return {"status": "ok", "logged": len(sink.events())}


@dataclass
class ServiceConfig:
    """Backend choice plus engine and codec settings, loadable from JSON."""

    backend: ModelBackend
    engine: EngineConfig = field(default_factory=EngineConfig)
    telemetry_log: Path | None = None

    @staticmethod
    def from_file(path: Path) -> ServiceConfig:
        obj = json.loads(path.read_text(encoding="utf-8"))
        return ServiceConfig.from_mapping(obj, base_dir=path.parent)

    @staticmethod
    def from_mapping(obj: Mapping, base_dir: Path = Path(".")) -> ServiceConfig:
        backend_spec = obj.get("backend", {"type": "scripted"})
        backend_type = backend_spec.get("type", "scripted")
        backend: ModelBackend
        if backend_type == "scripted":
            script = backend_spec.get("script", {})
            if isinstance(script, str):
                script = json.loads((base_dir / script).read_text(encoding="utf-8"))
            backend = ScriptedBackend(
                script=script,
                default_patch=backend_spec.get("default_patch", ""),
                score=float(backend_spec.get("score", 0.0)),
            )
        elif backend_type == "remote":
            backend = RemoteBackend(
                endpoint=backend_spec["endpoint"],
                timeout_ms=float(backend_spec.get("timeout_ms", 2000.0)),
            )
        else:
            raise ValueError(f"unknown backend type {backend_type!r}")

        codec = CodecConfig(
            open_delimiter=obj.get("open_delimiter", CodecConfig.open_delimiter),
            close_delimiter=obj.get("close_delimiter", CodecConfig.close_delimiter),
            fix_marker=obj.get("fix_marker", CodecConfig.fix_marker),
            gap_marker=obj.get("gap_marker", CodecConfig.gap_marker),
        )
        engine = EngineConfig(
            score_threshold=obj.get("score_threshold"),
            suppress_full_deletion=bool(obj.get("suppress_full_deletion", True)),
            token_budget=int(obj.get("token_budget", 4096)),
            codec=codec,
        )
        log = obj.get("telemetry_log")
        return ServiceConfig(
            backend=backend,
            engine=engine,
            telemetry_log=(base_dir / log) if log else None,
        )


class _Handler(BaseHTTPRequestHandler):
    server_version = "pastefix/0.1"
    engine: SuggestionEngine
    sink: TelemetrySink

    def _send(self, status: int, payload: dict) -> None:
        body = json.dumps(payload, ensure_ascii=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.end_headers()
        self.wfile.write(body)

    def do_OPTIONS(self) -> None:  # noqa: N802 - http.server naming
        self.send_response(204)
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()

    def do_GET(self) -> None:  # noqa: N802
        if self.path == "/v1/healthz":
            self._send(200, {"status": "ok"})
        else:
            self._send(404, {"error": "NotFound"})

    def _read_body(self) -> Mapping:
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length)
        try:
            obj = json.loads(raw.decode("utf-8"))
        except ValueError as exc:
            raise BadRequest(f"body is not valid JSON: {exc}") from exc
        if not isinstance(obj, dict):
            raise BadRequest("body must be a JSON object")
        return obj

    def do_POST(self) -> None:  # noqa: N802
        try:
            if self.path == "/v1/suggest":
                request = parse_suggest_request(self._read_body())
                response = handle_suggest(request, self.engine, self.sink)
                self._send(200, response.to_json())
            elif self.path == "/v1/telemetry":
                ack = handle_telemetry(self._read_body(), self.sink)
                self._send(200, ack)
            else:
                self._send(404, {"error": "NotFound"})
        except BadRequest as exc:
            self._send(400, {"error": "BadRequest", "detail": str(exc)})
        except UnknownRequest as exc:
            self._send(404, {"error": "UnknownRequest", "detail": str(exc)})
        except BackendUnavailable as exc:
            self._send(503, {"error": "BackendUnavailable", "detail": str(exc)})

    def log_message(self, format: str, *args) -> None:  # noqa: A002 - base signature
        pass  # requests are high-frequency; keep the console quiet


def make_server(config: ServiceConfig, host: str = "127.0.0.1", port: int = 8123) -> ThreadingHTTPServer:
    """Build (but do not start) the HTTP server for the given config."""
    engine = SuggestionEngine(config.backend, config.engine)
    sink = TelemetrySink(config.telemetry_log)
    handler = type("BoundHandler", (_Handler,), {"engine": engine, "sink": sink})
    return ThreadingHTTPServer((host, port), handler)


def serve_forever(config: ServiceConfig, host: str = "127.0.0.1", port: int = 8123) -> None:
    server = make_server(config, host, port)
    try:
        server.serve_forever()
    finally:
        server.server_close()
