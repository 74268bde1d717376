"""Live suggestion filtering: rolling history store plus a JSON-over-HTTP front.

``POST /predict`` takes one event's single-event fields plus developer and
project ids, computes windowed features from the in-memory history, and
returns the acceptance probability and decision. The outcome arrives later
via ``POST /feedback``, which moves the pending event into the history. The
feature code is the same engine the batch pipeline uses, so a replayed
stream produces bit-identical probabilities in both paths.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .features.catalog import CATALOG
from .features.matrix import FeatureVector
from .features.windows import DEFAULT_WINDOW_DAYS, WindowEngine
from .logs import InteractionLog, LogParseError, serialize_log
from .model import TrainedModel

DEFAULT_PENDING_TIMEOUT_MS = 24 * 3600 * 1000

_REQUEST_FIELDS = (
    "event_id", "developer_id", "project_id", "trigger_timestamp",
    "preceding_lines", "preceding_chars", "preceding_last_line_chars",
    "preceding_comment_chars", "preceding_is_incomplete",
    "generated_lines", "generated_chars", "written_lines", "written_chars",
    "max_generated_lines", "max_generated_chars", "ide_type", "ide_version",
    "generation_time_ms",
)
_OPTIONAL_REQUEST_FIELDS = ("preceding_text", "generated_text")


class ServiceError(ValueError):
    """Client-side request problem; rendered as a 4xx payload."""


class PredictionService:
    """Model + rolling history; thread-safe via one internal lock."""

    def __init__(self, model: TrainedModel, window_days: float = DEFAULT_WINDOW_DAYS,
                 pending_timeout_ms: int = DEFAULT_PENDING_TIMEOUT_MS,
                 persist_path=None):
        if model.encoders is None:
            raise ValueError("serving requires a model saved with categorical encoders")
        self.model = model
        self.engine = WindowEngine(model.encoders, window_days)
        self.pending: dict[str, InteractionLog] = {}
        self.pending_timeout_ms = pending_timeout_ms
        self.latest_ts = 0
        self.persist_path = persist_path
        self._lock = threading.Lock()

    def warm(self, logs) -> None:
        """Preload completed events (e.g. from a history file) into the windows."""
        with self._lock:
            for log in sorted(logs, key=lambda l: (l.trigger_timestamp, l.event_id)):
                self.engine.push(log)
                self.latest_ts = max(self.latest_ts, log.trigger_timestamp)

    def _provisional_log(self, request: dict) -> InteractionLog:
        if not isinstance(request, dict):
            raise ServiceError("request body must be a JSON object")
        unknown = set(request) - set(_REQUEST_FIELDS) - set(_OPTIONAL_REQUEST_FIELDS)
        if unknown:
            raise ServiceError(f"unknown field '{sorted(unknown)[0]}'")
        missing = [f for f in _REQUEST_FIELDS if f not in request]
        if missing:
            raise ServiceError(f"missing field '{missing[0]}'")
        try:
            return InteractionLog(
                accepted=False, accepted_length_ratio=0.0, modified_text=None,
                **{f: request[f] for f in _REQUEST_FIELDS},
                **{f: request[f] for f in _OPTIONAL_REQUEST_FIELDS if f in request},
            )
        except (LogParseError, TypeError) as exc:
            raise ServiceError(f"invalid request: {exc}") from exc

    def _drop_stale_pending(self) -> None:
        cutoff = self.latest_ts - self.pending_timeout_ms
        stale = [eid for eid, log in self.pending.items() if log.trigger_timestamp < cutoff]
        for eid in stale:
            del self.pending[eid]

    def predict(self, request: dict) -> dict:
        started = time.perf_counter()
        log = self._provisional_log(request)
        with self._lock:
            if log.event_id in self.pending:
                raise ServiceError(f"event_id '{log.event_id}' already pending")
            values, missing = self.engine.features_for(log)
            vector = FeatureVector(
                event_id=log.event_id,
                trigger_timestamp=log.trigger_timestamp,
                label=False,
                values=values,
                missing=frozenset(missing),
            )
            probability = self.model.predict_proba(self._project(vector))
            self.pending[log.event_id] = log
            self.latest_ts = max(self.latest_ts, log.trigger_timestamp)
            self._drop_stale_pending()
        # An empty developer/project window leaves its count features at zero.
        cold_developer = values["developer_generated_counts"] == 0.0
        cold_project = values["project_IDE_version_counts"] == 0.0
        return {
            "event_id": log.event_id,
            "probability": probability,
            "decision": "accept" if probability >= self.model.threshold else "reject",
            "model_version": self.model.fingerprint,
            "cold_start": cold_developer and cold_project,
            "cold_start_developer": cold_developer,
            "cold_start_project": cold_project,
            "latency_ms": (time.perf_counter() - started) * 1000.0,
        }

    def _project(self, vector: FeatureVector) -> FeatureVector:
        needed = self.model.feature_names
        return FeatureVector(
            event_id=vector.event_id,
            trigger_timestamp=vector.trigger_timestamp,
            label=vector.label,
            values={n: vector.values[n] for n in needed},
            missing=frozenset(n for n in vector.missing if n in needed),
        )

    def feedback(self, payload: dict) -> dict:
        if not isinstance(payload, dict):
            raise ServiceError("feedback body must be a JSON object")
        event_id = payload.get("event_id")
        if not isinstance(event_id, str):
            raise ServiceError("missing field 'event_id'")
        if "accepted" not in payload or not isinstance(payload["accepted"], bool):
            raise ServiceError("missing boolean field 'accepted'")
        accepted = payload["accepted"]
        ratio = payload.get("accepted_length_ratio", 1.0 if accepted else 0.0)
        modified = payload.get("modified_text")
        with self._lock:
            pending = self.pending.pop(event_id, None)
            if pending is None:
                raise ServiceError(f"no pending event with event_id '{event_id}'")
            try:
                completed = replace(pending, accepted=accepted,
                                    accepted_length_ratio=float(ratio),
                                    modified_text=modified)
            except LogParseError as exc:
                raise ServiceError(f"invalid feedback: {exc}") from exc
            self.engine.push(completed)
            self.latest_ts = max(self.latest_ts, completed.trigger_timestamp)
            if self.persist_path is not None:
                with open(self.persist_path, "a", encoding="utf-8") as handle:
                    handle.write(serialize_log(completed) + "\n")
        return {"event_id": event_id, "recorded": True}

    def health(self) -> dict:
        return {
            "status": "ok",
            "model_version": self.model.fingerprint,
            "features": len(self.model.feature_names),
            "pending": len(self.pending),
        }


class _Handler(BaseHTTPRequestHandler):
    service: PredictionService  # set by make_server

    def _reply(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _read_json(self) -> dict:
        length = int(self.headers.get("Content-Length", "0"))
        raw = self.rfile.read(length)
        try:
            return json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ServiceError(f"malformed JSON body: {exc}") from exc

    def do_GET(self):  # noqa: N802 - http.server API
        if self.path == "/healthz":
            self._reply(200, self.service.health())
        else:
            self._reply(404, {"error": f"unknown path {self.path}"})

    def do_POST(self):  # noqa: N802 - http.server API
        try:
            payload = self._read_json()
            if self.path == "/predict":
                self._reply(200, self.service.predict(payload))
            elif self.path == "/feedback":
                self._reply(200, self.service.feedback(payload))
            else:
                self._reply(404, {"error": f"unknown path {self.path}"})
        except ServiceError as exc:
            self._reply(400, {"error": str(exc)})

    def log_message(self, fmt, *args):  # quiet by default
        pass


def make_server(service: PredictionService, host: str = "127.0.0.1",
                port: int = 8000) -> ThreadingHTTPServer:
    handler = type("BoundHandler", (_Handler,), {"service": service})
    return ThreadingHTTPServer((host, port), handler)


def run_server(service: PredictionService, host: str = "127.0.0.1", port: int = 8000) -> None:
    server = make_server(service, host, port)
    try:
        server.serve_forever()
    finally:
        server.server_close()
