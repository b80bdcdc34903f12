"""HTTP/SSE control surface in front of one enclave.

The API layer is stateless: every read is an atomic snapshot of the
orchestrator, every mutation forwards into the enclave under its lock, and
the event stream replays the audit log from a client-held cursor, so a
restarted API process loses nothing.
"""

from __future__ import annotations

import asyncio
import json
import threading
import time
from typing import Any, Mapping

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse, StreamingResponse

from cpcon.errors import (
    AlreadyResolvedError,
    DeescalationError,
    DuplicateActionError,
    PolicyError,
)
from cpcon.policy.wire import parse_directive
from cpcon.runtime import Enclave

#: audit kinds surfaced on the stream map to these SSE event names
_HEARTBEAT_S = 2.0
_POLL_S = 0.05


class ControlPlane:
    """Thread-safe facade the API handlers talk to."""

    def __init__(self, enclave: Enclave):
        self.enclave = enclave
        self.started = False
        self._ticker: threading.Thread | None = None
        self._stop = threading.Event()

    # --- lifecycle ---------------------------------------------------------

    def start(self) -> None:
        self.started = True

    def start_realtime(self, tick_ms: int = 20) -> None:
        """Drive the virtual clock at wall pace in a background thread."""
        self.start()
        if self._ticker is not None:
            return
        self._stop.clear()

        def _loop() -> None:
            while not self._stop.is_set():
                self.enclave.pump(tick_ms)
                time.sleep(tick_ms / 1000.0)

        self._ticker = threading.Thread(target=_loop, name="cpcon-ticker", daemon=True)
        self._ticker.start()

    def stop(self) -> None:
        self._stop.set()
        if self._ticker is not None:
            self._ticker.join(timeout=2)
            self._ticker = None
        self.started = False

    def pump(self, dt_ms: int) -> int:
        return self.enclave.pump(dt_ms)

    # --- reads ----------------------------------------------------------------

    def snapshot(self) -> dict[str, Any]:
        with self.enclave.lock:
            return self.enclave.orchestrator.snapshot()

    def audit_since(self, seq: int) -> list[dict[str, Any]]:
        with self.enclave.lock:
            return [e for e in self.enclave.orchestrator.audit_log if e["seq"] > seq]

    # --- mutations ---------------------------------------------------------------

    def submit_directive(self, body: Mapping[str, Any]) -> int:
        directive = parse_directive(body)
        allow_deescalation = bool(body.get("allow_deescalation", False))
        with self.enclave.lock:
            record = self.enclave.orchestrator.submit_directive(
                directive, issuer="operator", allow_deescalation=allow_deescalation
            )
            return record.directive_id

    def approve(self, rec_id: int) -> int:
        with self.enclave.lock:
            record = self.enclave.orchestrator.approve_recommendation(rec_id)
            return record.directive_id

    def dismiss(self, rec_id: int) -> None:
        with self.enclave.lock:
            self.enclave.orchestrator.dismiss_recommendation(rec_id)

    def record_obj(self, directive_id: int) -> dict[str, Any] | None:
        with self.enclave.lock:
            record = self.enclave.orchestrator.record_by_id(directive_id)
            return None if record is None else record.to_obj()


def _sse_frame(entry: Mapping[str, Any]) -> str:
    data = json.dumps(entry, sort_keys=True)
    return f"id: {entry['seq']}\nevent: {entry['category']}\ndata: {data}\n\n"


def create_app(plane: ControlPlane, token: str | None = None) -> FastAPI:
    """Build the FastAPI application bound to one control plane."""
    app = FastAPI(title="cpcon orchestrator", version="0.1.0", docs_url=None, redoc_url=None)

    def _auth_failure(request: Request) -> JSONResponse | None:
        if token is None:
            return None
        if request.headers.get("x-auth-token") == token:
            return None
        # EventSource cannot set headers; the stream may pass it as a query arg
        if request.query_params.get("token") == token:
            return None
        return JSONResponse({"error": "invalid or missing token"}, status_code=401)

    @app.get("/api/state")
    def get_state(request: Request) -> Response:
        denied = _auth_failure(request)
        if denied is not None:
            return denied
        if not plane.started:
            return JSONResponse({"error": "orchestrator loop not started"}, status_code=503)
        snapshot = plane.snapshot()
        return JSONResponse(snapshot, headers={"X-Snapshot-Version": str(snapshot["version"])})

    @app.post("/api/directives")
    async def post_directive(request: Request) -> Response:
        denied = _auth_failure(request)
        if denied is not None:
            return denied
        if not plane.started:
            return JSONResponse({"error": "orchestrator loop not started"}, status_code=503)
        try:
            body = await request.json()
        except json.JSONDecodeError as exc:
            return JSONResponse({"error": f"MalformedJson: {exc}"}, status_code=400)
        try:
            directive_id = plane.submit_directive(body)
        except (DuplicateActionError, DeescalationError) as exc:
            return JSONResponse(
                {"error": f"{type(exc).__name__.removesuffix('Error')}: {exc}"},
                status_code=422,
            )
        except PolicyError as exc:
            return JSONResponse(
                {"error": f"{type(exc).__name__.removesuffix('Error')}: {exc}"},
                status_code=400,
            )
        return JSONResponse({"directive_id": directive_id}, status_code=202)

    @app.get("/api/directives/{directive_id}")
    def get_directive(directive_id: int, request: Request) -> Response:
        denied = _auth_failure(request)
        if denied is not None:
            return denied
        record = plane.record_obj(directive_id)
        if record is None:
            return JSONResponse({"error": "unknown directive"}, status_code=404)
        return JSONResponse(record)

    @app.post("/api/recommendations/{rec_id}/approve")
    def approve_recommendation(rec_id: int, request: Request) -> Response:
        denied = _auth_failure(request)
        if denied is not None:
            return denied
        try:
            directive_id = plane.approve(rec_id)
        except KeyError:
            return JSONResponse({"error": "unknown recommendation"}, status_code=404)
        except AlreadyResolvedError as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        return JSONResponse({"directive_id": directive_id})

    @app.post("/api/recommendations/{rec_id}/dismiss")
    def dismiss_recommendation(rec_id: int, request: Request) -> Response:
        denied = _auth_failure(request)
        if denied is not None:
            return denied
        try:
            plane.dismiss(rec_id)
        except KeyError:
            return JSONResponse({"error": "unknown recommendation"}, status_code=404)
        except AlreadyResolvedError as exc:
            return JSONResponse({"error": str(exc)}, status_code=409)
        return JSONResponse({"status": "dismissed"})

    @app.get("/api/stream")
    async def stream(request: Request, since: int = 0) -> Response:
        denied = _auth_failure(request)
        if denied is not None:
            return denied

        async def generate():
            cursor = since
            yield "retry: 2000\n\n"
            idle = 0.0
            while True:
                if await request.is_disconnected():
                    return
                entries = plane.audit_since(cursor)
                if entries:
                    idle = 0.0
                    for entry in entries:
                        cursor = entry["seq"]
                        yield _sse_frame(entry)
                    await asyncio.sleep(0)
                else:
                    idle += _POLL_S
                    if idle >= _HEARTBEAT_S:
                        idle = 0.0
                        yield ": heartbeat\n\n"
                    await asyncio.sleep(_POLL_S)

        return StreamingResponse(generate(), media_type="text/event-stream")

    return app
