"""HTTP serve mode backing the browser explorer.

Endpoints:

    GET  /api/health              -> {"status", "mode", "n_obs"}
    GET  /api/report              -> the full report document
    GET  /api/weights/row/{i}     -> row i of W (recompute mode only)
    POST /api/recompute           -> body {"deleted": [indices]}; a fresh
                                     report on the remaining rows
                                     (recompute mode only)

Static mode serves a previously written report file and answers 409 for
anything that needs the model. Recompute mode runs the pipeline at
startup and holds the bundle so deletions can be replayed from scratch;
deletion indices always refer to the original data. Reads are lock-free
against immutable snapshots; recomputes are serialized by a lock.
"""

from __future__ import annotations

import json
import re
import threading
from dataclasses import dataclass
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .bundle import ProblemBundle
from .decompose import weight_row
from .errors import BorrowfacError, IndexOutOfRange
from .pipeline import PipelineOptions, run_pipeline
from .report import Report, json_bytes, read_report, report_bytes

__all__ = ["build_server", "serve"]

_ROW_PATH = re.compile(r"^/api/weights/row/(-?\d+)$")


@dataclass
class _ServeState:
    mode: str
    report_data: bytes
    n_obs: int
    bundle: ProblemBundle | None = None
    result: object = None
    options: PipelineOptions | None = None
    lock: threading.Lock = None  # type: ignore[assignment]


class _Handler(BaseHTTPRequestHandler):
    server_version = "borrowfac"
    protocol_version = "HTTP/1.1"

    @property
    def state(self) -> _ServeState:
        return self.server.state  # type: ignore[attr-defined]

    def log_message(self, format, *args):  # noqa: A002 - stdlib signature
        pass

    def _send(self, code: int, payload: bytes):
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.send_header("Access-Control-Allow-Origin", "*")
        self.send_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS")
        self.send_header("Access-Control-Allow-Headers", "Content-Type")
        self.end_headers()
        self.wfile.write(payload)

    def _send_obj(self, code: int, obj):
        self._send(code, json_bytes(obj))

    def _error(self, code: int, message: str):
        self._send_obj(code, {"error": message})

    def do_OPTIONS(self):
        self._send(204, b"")

    def do_GET(self):
        st = self.state
        if self.path == "/api/health":
            self._send_obj(200, {"status": "ok", "mode": st.mode, "n_obs": st.n_obs})
            return
        if self.path == "/api/report":
            self._send(200, st.report_data)
            return
        m = _ROW_PATH.match(self.path)
        if m:
            self._weights_row(int(m.group(1)))
            return
        self._error(404, f"no such endpoint: {self.path}")

    def _weights_row(self, i: int):
        st = self.state
        if st.mode != "recompute":
            self._error(409, "weight rows need the model; serve a bundle, not a report")
            return
        if not (0 <= i < st.n_obs):
            self._error(404, f"row {i} outside 0..{st.n_obs - 1}")
            return
        result = st.result
        row = weight_row(
            result.model,
            result.decomposition.scale,
            i,
            condition_cols=result.decomposition.condition_on,
        )
        self._send_obj(200, {
            "index": i,
            "n_obs": st.n_obs,
            "weights": [float(v) for v in row.weights],
        })

    def do_POST(self):
        if self.path != "/api/recompute":
            self._error(404, f"no such endpoint: {self.path}")
            return
        st = self.state
        if st.mode != "recompute":
            self._error(409, "recompute is unavailable in static mode")
            return
        deleted = self._parse_deleted()
        if deleted is None:
            return
        try:
            with st.lock:
                reduced = st.bundle.without_rows(deleted)
                result = run_pipeline(reduced, st.options)
            payload = report_bytes(result.report)
        except IndexOutOfRange as exc:
            self._error(404, str(exc))
            return
        except BorrowfacError as exc:
            self._error(400, f"recompute failed: {exc}")
            return
        self._send(200, payload)

    def _parse_deleted(self):
        st = self.state
        try:
            length = int(self.headers.get("Content-Length", ""))
        except ValueError:
            self._error(400, "missing Content-Length")
            return None
        raw = self.rfile.read(length)
        try:
            body = json.loads(raw.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError):
            self._error(400, "body is not valid JSON")
            return None
        if not isinstance(body, dict) or "deleted" not in body:
            self._error(400, 'body must be {"deleted": [indices]}')
            return None
        deleted = body["deleted"]
        if not isinstance(deleted, list) or any(
            not isinstance(v, int) or isinstance(v, bool) for v in deleted
        ):
            self._error(400, '"deleted" must be a list of integers')
            return None
        out_of_range = [v for v in deleted if not (0 <= v < st.n_obs)]
        if out_of_range:
            self._error(404, f"deleted indices {out_of_range} outside 0..{st.n_obs - 1}")
            return None
        if len(set(deleted)) >= st.n_obs:
            self._error(400, "cannot delete every observation")
            return None
        return sorted(set(deleted))


def build_server(
    source,
    port: int = 8000,
    host: str = "127.0.0.1",
    options: PipelineOptions | None = None,
) -> ThreadingHTTPServer:
    """Create (but do not start) the HTTP server.

    ``source`` is a Report (or path to one) for static mode, or a
    ProblemBundle for recompute mode.
    """
    options = options or PipelineOptions()
    if isinstance(source, ProblemBundle):
        result = run_pipeline(source, options)
        state = _ServeState(
            mode="recompute",
            report_data=report_bytes(result.report),
            n_obs=source.n_obs,
            bundle=source,
            result=result,
            options=options,
            lock=threading.Lock(),
        )
    else:
        report = source if isinstance(source, Report) else read_report(source)
        state = _ServeState(
            mode="static",
            report_data=report_bytes(report),
            n_obs=len(report.records),
            lock=threading.Lock(),
        )
    server = ThreadingHTTPServer((host, port), _Handler)
    server.state = state  # type: ignore[attr-defined]
    return server


def serve(source, port: int = 8000, host: str = "127.0.0.1",
          options: PipelineOptions | None = None):
    """Run the explorer backend until interrupted."""
    server = build_server(source, port=port, host=host, options=options)
    try:
        server.serve_forever()
    finally:
        server.server_close()
