"""HTTP session service: a thin adapter exposing SessionCore to clients.

The service owns no exam logic. Each session wraps one SessionCore; requests
translate to engine events timestamped with the server clock (session-
relative seconds), so any request transcript produces exactly the record a
direct engine run with the same response timestamps would. Sessions live in
memory; an optional append-only JSONL event log records creations, responses
and completed trials, and completed trials are restored from it on restart.

Endpoints (JSON bodies; NaN spelled as the string "NaN"):
  POST /sessions                      create; body {participant_id, site, ...}
  GET  /sessions/{id}/next            pending stimulus or completion
  POST /sessions/{id}/response        timestamped detection press
  GET  /sessions/{id}/trace           rows recorded so far
  GET  /sessions/{id}/result          final threshold (409 while running)
"""

from __future__ import annotations

import json
import math
import re
import threading
import time
from dataclasses import replace
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Optional

from .errors import PerceptError
from .session import (
    BodySite,
    SessionConfig,
    SessionCore,
    SessionFinishedError,
    TrialRecord,
    TrialRow,
)
from .staircase import StaircaseConfig, TrialThreshold
from .study import rng_for

_SESSION_PATH = re.compile(r"^/sessions/([A-Za-z0-9-]+)/(next|response|trace|result)$")

_SESSION_CONFIG_KEYS = {
    "isi_min_s", "isi_max_s", "response_window_s", "stimulus_duration_s", "reps_per_site",
}
_STAIRCASE_CONFIG_KEYS = {
    "initial_level", "step_size", "max_level", "min_level",
    "target_reversals", "ceiling_misses_for_nan",
}


class ApiError(PerceptError):
    def __init__(self, status: int, message: str):
        self.status = status
        super().__init__(message)


def _json_value(v):
    if isinstance(v, float) and math.isnan(v):
        return "NaN"
    return v


def _threshold_payload(threshold):
    return {
        "value": _json_value(threshold.value),
        "reversal_values": [_json_value(v) for v in threshold.reversal_values],
        "saturated": threshold.saturated,
    }


def _rows_payload(record: TrialRecord):
    return [
        {
            "stimulus_index": r.stimulus_index,
            "onset_s": r.onset_s,
            "level": r.level,
            "detected": r.detected,
            "reversal": r.reversal,
            "latency_s": r.latency_s,
        }
        for r in record.rows
    ]


class _LiveSession:
    """One session: engine core, its own lock, and its wall-clock anchor."""

    def __init__(self, session_id: str, core: Optional[SessionCore], clock,
                 strict: bool, use_client_timestamp: bool):
        self.session_id = session_id
        self.core = core
        self.lock = threading.Lock()
        self.clock = clock
        self.t0 = clock()
        self.strict = strict
        self.use_client_timestamp = use_client_timestamp
        self.restored_record: Optional[TrialRecord] = None
        self.completion_logged = False

    def now(self) -> float:
        return self.clock() - self.t0


class SessionService:
    """Session registry + request dispatch; transport-independent and testable."""

    def __init__(self, seed: Optional[int] = None, clock=time.monotonic,
                 event_log_path=None):
        self._seed = seed if seed is not None else int(time.time_ns() % 2**31)
        self._clock = clock
        self._sessions: dict[str, _LiveSession] = {}
        self._registry_lock = threading.Lock()
        self._counter = 0
        self._event_log_path = Path(event_log_path) if event_log_path else None
        self._log_lock = threading.Lock()
        if self._event_log_path and self._event_log_path.exists():
            self._restore_completed()

    # -- event log ---------------------------------------------------------

    def _log_event(self, event: dict) -> None:
        if self._event_log_path is None:
            return
        line = json.dumps(event, allow_nan=False, separators=(",", ":"))
        with self._log_lock:
            with open(self._event_log_path, "a", encoding="ascii") as fh:
                fh.write(line + "\n")

    def _restore_completed(self) -> None:
        for record, session_id in read_completed_trials(self._event_log_path):
            live = _LiveSession(session_id, core=None, clock=self._clock, strict=False,
                                use_client_timestamp=False)
            live.restored_record = record
            live.completion_logged = True
            self._sessions[session_id] = live

    # -- dispatch ----------------------------------------------------------

    def handle(self, method: str, path: str, body: Optional[bytes]):
        """Route one request; returns (status, payload dict)."""
        try:
            if method == "POST" and path == "/sessions":
                return 200, self._create(self._parse_body(body))
            m = _SESSION_PATH.match(path)
            if m:
                session_id, action = m.groups()
                live = self._sessions.get(session_id)
                if live is None:
                    raise ApiError(404, f"unknown session {session_id}")
                if method == "GET" and action == "next":
                    return 200, self._next(live)
                if method == "POST" and action == "response":
                    return 200, self._response(live, self._parse_body(body), session_id)
                if method == "GET" and action == "trace":
                    return 200, self._trace(live)
                if method == "GET" and action == "result":
                    return 200, self._result(live)
            raise ApiError(404, f"no route for {method} {path}")
        except ApiError as exc:
            return exc.status, {"error": str(exc)}

    @staticmethod
    def _parse_body(body: Optional[bytes]) -> dict:
        if not body:
            return {}
        try:
            parsed = json.loads(body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise ApiError(422, f"malformed JSON body: {exc}") from None
        if not isinstance(parsed, dict):
            raise ApiError(422, "body must be a JSON object")
        return parsed

    def _create(self, body: dict) -> dict:
        participant_id = str(body.get("participant_id", ""))
        site_code = body.get("site")
        site = None
        if site_code is not None:
            if site_code not in BodySite.__members__:
                raise ApiError(422, f"unknown site {site_code!r}")
            site = BodySite[site_code]
        try:
            session_config = _config_from(body.get("config"), SessionConfig(),
                                          _SESSION_CONFIG_KEYS).validate()
            staircase_config = _config_from(body.get("staircase"), StaircaseConfig(),
                                            _STAIRCASE_CONFIG_KEYS).validate()
        except (PerceptError, ValueError, TypeError) as exc:
            raise ApiError(422, f"bad config: {exc}") from None
        rep_index = int(body.get("rep", 0))
        with self._registry_lock:
            self._counter += 1
            session_id = f"s{self._counter:06d}"
            core = SessionCore(
                session_config,
                staircase_config,
                rng_for(self._seed, "session", session_id),
                participant_id=participant_id,
                site=site,
                rep_index=rep_index,
            )
            self._sessions[session_id] = _LiveSession(
                session_id,
                core,
                self._clock,
                strict=bool(body.get("strict", False)),
                use_client_timestamp=bool(body.get("use_client_timestamp", False)),
            )
        self._log_event(
            {
                "event": "session_created",
                "session_id": session_id,
                "participant_id": participant_id,
                "site": site.code if site else None,
                "rep": rep_index,
            }
        )
        return {"session_id": session_id}

    @staticmethod
    def _completion_payload(record: TrialRecord) -> dict:
        return {"complete": True, "threshold": _threshold_payload(record.threshold)}

    def _next(self, live: _LiveSession) -> dict:
        if live.restored_record is not None:
            return self._completion_payload(live.restored_record)
        with live.lock:
            now = live.now()
            live.core.advance_to(now)
            if live.core.finished:
                record = live.core.record()
                self._maybe_log_completion(live, record)
                return self._completion_payload(record)
            p = live.core.pending()
            return {
                "complete": False,
                "stimulus_index": p.index,
                "level": p.level,
                "onset_s": p.onset_s,
                "response_deadline_s": p.window_close_s,
                "server_time_s": round(now, 3),
            }

    def _response(self, live: _LiveSession, body: dict, session_id: str) -> dict:
        if live.restored_record is not None:
            raise ApiError(409, "session already complete")
        with live.lock:
            now = live.now()
            if live.use_client_timestamp and "client_timestamp" in body:
                try:
                    t = float(body["client_timestamp"])
                except (TypeError, ValueError):
                    raise ApiError(422, "client_timestamp must be a number") from None
            else:
                t = now
            live.core.advance_to(min(t, now))
            if live.core.finished:
                self._maybe_log_completion(live, live.core.record())
                raise ApiError(409, "session already complete")
            if live.strict:
                p = live.core.pending()
                offset = t - p.onset_s
                if not 0 <= offset <= live.core.session_config.response_window_s:
                    raise ApiError(409, "response outside the open response window")
            try:
                classification = live.core.submit_response(t)
            except SessionFinishedError:
                raise ApiError(409, "session already complete") from None
            except ValueError as exc:
                raise ApiError(422, str(exc)) from None
            if live.core.finished:
                self._maybe_log_completion(live, live.core.record())
        self._log_event(
            {
                "event": "response",
                "session_id": session_id,
                "t": round(t, 3),
                "classification": classification,
            }
        )
        return {"classification": classification}

    def _maybe_log_completion(self, live: _LiveSession, record: TrialRecord) -> None:
        if live.completion_logged:
            return
        live.completion_logged = True
        self._log_event(
            {
                "event": "trial_complete",
                "session_id": live.session_id,
                "participant_id": record.participant_id,
                "site": record.site.code if record.site else None,
                "rep": record.rep_index,
                "false_positive_count": record.false_positive_count,
                "threshold": _threshold_payload(record.threshold),
                "rows": _rows_payload(record),
            }
        )

    def _trace(self, live: _LiveSession) -> dict:
        if live.restored_record is not None:
            return {"rows": _rows_payload(live.restored_record), "complete": True}
        with live.lock:
            live.core.advance_to(live.now())
            record = live.core.record()
            if live.core.finished:
                self._maybe_log_completion(live, record)
            return {"rows": _rows_payload(record), "complete": live.core.finished}

    def _result(self, live: _LiveSession) -> dict:
        if live.restored_record is not None:
            return _threshold_payload(live.restored_record.threshold)
        with live.lock:
            live.core.advance_to(live.now())
            if not live.core.finished:
                raise ApiError(409, "session still running")
            record = live.core.record()
            self._maybe_log_completion(live, record)
            return _threshold_payload(record.threshold)

    def record_for(self, session_id: str) -> TrialRecord:
        """Server-side record (testing and export)."""
        live = self._sessions[session_id]
        if live.restored_record is not None:
            return live.restored_record
        with live.lock:
            return live.core.record()


def _config_from(overrides, default, allowed_keys):
    if not overrides:
        return default
    if not isinstance(overrides, dict):
        raise ApiError(422, "config overrides must be an object")
    unknown = set(overrides) - allowed_keys
    if unknown:
        raise ApiError(422, f"unknown config fields: {sorted(unknown)}")
    return replace(default, **overrides)


def read_completed_trials(event_log_path):
    """Yield (TrialRecord, session_id) for every completed trial in a JSONL log."""
    path = Path(event_log_path)
    if not path.exists():
        raise PerceptError(f"event log not found: {path}")
    with open(path, encoding="ascii") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                event = json.loads(line)
            except json.JSONDecodeError as exc:
                raise PerceptError(f"{path}:{lineno}: bad event line: {exc.msg}") from None
            if event.get("event") != "trial_complete":
                continue
            th = event["threshold"]
            value = math.nan if th["value"] == "NaN" else float(th["value"])
            threshold = TrialThreshold(
                value=value,
                reversal_values=tuple(
                    math.nan if v == "NaN" else float(v) for v in th["reversal_values"]
                ),
                saturated=bool(th["saturated"]),
            )
            rows = tuple(
                TrialRow(
                    stimulus_index=int(r["stimulus_index"]),
                    onset_s=float(r["onset_s"]),
                    level=float(r["level"]),
                    detected=bool(r["detected"]),
                    reversal=bool(r["reversal"]),
                    latency_s=None if r["latency_s"] is None else float(r["latency_s"]),
                )
                for r in event["rows"]
            )
            record = TrialRecord(
                participant_id=event.get("participant_id", ""),
                site=BodySite[event["site"]] if event.get("site") else None,
                rep_index=int(event.get("rep", 0)),
                rows=rows,
                threshold=threshold,
                false_positive_count=int(event.get("false_positive_count", 0)),
            )
            yield record, event["session_id"]


class _Handler(BaseHTTPRequestHandler):
    protocol_version = "HTTP/1.1"
    service: SessionService = None
    static_dir: Optional[Path] = None

    def log_message(self, fmt, *args):  # keep test output quiet
        pass

    def _send_json(self, status: int, payload: dict) -> None:
        data = json.dumps(payload, allow_nan=False).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def _read_body(self) -> bytes:
        length = int(self.headers.get("Content-Length", 0) or 0)
        return self.rfile.read(length) if length else b""

    def _serve_static(self, path: str) -> None:
        if self.static_dir is None:
            self._send_json(404, {"error": f"no route for GET {path}"})
            return
        rel = path.lstrip("/") or "index.html"
        target = (self.static_dir / rel).resolve()
        if not str(target).startswith(str(self.static_dir.resolve())) or not target.is_file():
            self._send_json(404, {"error": f"not found: {path}"})
            return
        content_types = {
            ".html": "text/html", ".js": "text/javascript", ".css": "text/css",
            ".json": "application/json", ".svg": "image/svg+xml",
        }
        data = target.read_bytes()
        self.send_response(200)
        self.send_header(
            "Content-Type", content_types.get(target.suffix, "application/octet-stream")
        )
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def do_GET(self):
        if self.path == "/sessions" or self.path.startswith("/sessions/"):
            status, payload = self.service.handle("GET", self.path, None)
            self._send_json(status, payload)
        else:
            self._serve_static(self.path)

    def do_POST(self):
        status, payload = self.service.handle("POST", self.path, self._read_body())
        self._send_json(status, payload)


def make_server(
    port: int,
    seed: Optional[int] = None,
    static_dir=None,
    event_log_path=None,
    host: str = "127.0.0.1",
) -> ThreadingHTTPServer:
    """Build (but do not start) the threaded HTTP server."""
    service = SessionService(seed=seed, event_log_path=event_log_path)
    handler = type(
        "BoundHandler",
        (_Handler,),
        {"service": service, "static_dir": Path(static_dir) if static_dir else None},
    )
    server = ThreadingHTTPServer((host, port), handler)
    server.service = service
    return server


def serve_forever(port: int, seed=None, static_dir=None, event_log_path=None,
                  host: str = "0.0.0.0") -> None:
    server = make_server(port, seed=seed, static_dir=static_dir,
                         event_log_path=event_log_path, host=host)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
