"""Northbound API: snapshots, directive submission, approvals, SSE stream.

Plain endpoints run under the in-process test client; the SSE tests run
against a real uvicorn server on a loopback socket because the in-process
transport buffers streaming bodies.
"""

from __future__ import annotations

import json
import socket
import threading
import time

import httpx
import pytest
import uvicorn
from fastapi.testclient import TestClient

from conftest import fixture_json
from cpcon.api.server import ControlPlane, create_app
from cpcon.orchestrator.engine import OrchestratorConfig
from cpcon.policy.model import Alert, CpconLevel, Event
from cpcon.runtime import Enclave


@pytest.fixture
def plane() -> ControlPlane:
    enclave = Enclave.build(id_seed=42, config=OrchestratorConfig(baseline_level=4))
    return ControlPlane(enclave)


@pytest.fixture
def client(plane) -> TestClient:
    plane.start()
    return TestClient(create_app(plane))


@pytest.fixture
def live_server(plane):
    """A real HTTP server for streaming tests; yields an httpx client."""
    plane.start()
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    config = uvicorn.Config(
        create_app(plane), host="127.0.0.1", port=port, log_level="error"
    )
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("uvicorn did not start")
        time.sleep(0.02)
    with httpx.Client(base_url=f"http://127.0.0.1:{port}", timeout=10) as http:
        yield http
    server.should_exit = True
    thread.join(timeout=5)


def drive_dns_dos(plane: ControlPlane) -> None:
    enclave = plane.enclave
    with enclave.lock:
        enclave.orchestrator.ingest_event(
            Event(alert=Alert(45189, "DNS_DoS"), cpcon_level=CpconLevel(4))
        )
    plane.pump(10)


class TestState:
    def test_fresh_start_snapshot(self, client):
        resp = client.get("/api/state")
        assert resp.status_code == 200
        snap = resp.json()
        assert snap["cpcon_level"] == 4
        assert snap["directives"] == []
        assert len(snap["hosts"]) == 6
        assert int(resp.headers["x-snapshot-version"]) >= 0

    def test_before_loop_start_is_503(self, plane):
        client = TestClient(create_app(plane))  # plane.start() never called
        assert client.get("/api/state").status_code == 503

    def test_version_header_is_monotone(self, client, plane):
        v1 = int(client.get("/api/state").headers["x-snapshot-version"])
        drive_dns_dos(plane)
        v2 = int(client.get("/api/state").headers["x-snapshot-version"])
        assert v2 > v1

    def test_scenario_end_state_over_api(self, plane):
        # drive the whole incident through the engine, then read it back
        from cpcon.scenario.harness import run_scenario, ScenarioOptions

        report = run_scenario("full_timeline", 42, ScenarioOptions())
        snap = report.final_snapshot
        assert snap["cpcon_level"] == 2
        attacker_row = next(h for h in snap["hosts"] if h["host_id"] == 45189)
        assert "dns_response" in attacker_row["modules"]
        assert attacker_row["isolated"]


class TestSubmitDirective:
    def test_level3_body_accepted_and_eventually_verified(self, client, plane):
        body = fixture_json("directive_cpcon3.json")
        resp = client.post("/api/directives", json=body)
        assert resp.status_code == 202
        directive_id = resp.json()["directive_id"]
        plane.pump(500)
        record = client.get(f"/api/directives/{directive_id}").json()
        assert record["status"] == "verified"

    def test_level_seven_is_400(self, client):
        body = dict(fixture_json("directive_cpcon3.json"), cpcon_level=7)
        resp = client.post("/api/directives", json=body)
        assert resp.status_code == 400
        assert "LevelOutOfRange" in resp.json()["error"]

    def test_unknown_subnet_accepted_then_failed(self, client, plane):
        body = {
            "cpcon_level": 3,
            "threat": "web_applications",
            "actions": [{"verb": "block_web_traffic", "targets": ["subnet:nonexistent"]}],
        }
        resp = client.post("/api/directives", json=body)
        assert resp.status_code == 202
        plane.pump(500)
        record = client.get(f"/api/directives/{resp.json()['directive_id']}").json()
        assert record["status"] == "failed"
        assert "UnknownTarget" in record["per_action"][0]["detail"]

    def test_not_json_is_400(self, client):
        resp = client.post(
            "/api/directives", content=b"{oops", headers={"content-type": "application/json"}
        )
        assert resp.status_code == 400

    def test_deescalation_is_422(self, client):
        body = {
            "cpcon_level": 5,
            "threat": "web_applications",
            "actions": [{"verb": "build_isolate_mod", "targets": ["all_hosts"]}],
        }
        resp = client.post("/api/directives", json=body)
        assert resp.status_code == 422

    def test_unknown_directive_404(self, client):
        assert client.get("/api/directives/999").status_code == 404


class TestApprove:
    def test_approve_pending_recommendation(self, client, plane):
        drive_dns_dos(plane)
        snap = client.get("/api/state").json()
        rec_id = snap["pending_recommendations"][0]["rec_id"]
        resp = client.post(f"/api/recommendations/{rec_id}/approve")
        assert resp.status_code == 200
        plane.pump(500)
        record = client.get(f"/api/directives/{resp.json()['directive_id']}").json()
        assert record["status"] == "verified"
        assert client.get("/api/state").json()["cpcon_level"] == 3

    def test_double_approve_is_409(self, client, plane):
        drive_dns_dos(plane)
        rec_id = client.get("/api/state").json()["pending_recommendations"][0]["rec_id"]
        assert client.post(f"/api/recommendations/{rec_id}/approve").status_code == 200
        assert client.post(f"/api/recommendations/{rec_id}/approve").status_code == 409

    def test_unknown_recommendation_is_404(self, client):
        assert client.post("/api/recommendations/404/approve").status_code == 404

    def test_dismiss(self, client, plane):
        drive_dns_dos(plane)
        rec_id = client.get("/api/state").json()["pending_recommendations"][0]["rec_id"]
        assert client.post(f"/api/recommendations/{rec_id}/dismiss").status_code == 200
        assert client.get("/api/state").json()["pending_recommendations"] == []


class TestAuth:
    def test_token_required_when_configured(self, plane):
        plane.start()
        client = TestClient(create_app(plane, token="hunter2"))
        assert client.get("/api/state").status_code == 401
        assert client.get("/api/state", headers={"X-Auth-Token": "nope"}).status_code == 401
        assert client.get("/api/state", headers={"X-Auth-Token": "hunter2"}).status_code == 200

    def test_stream_accepts_token_as_query_param(self, plane):
        plane.start()
        client = TestClient(create_app(plane, token="hunter2"))
        # the 401 path responds immediately; the happy path would stream
        assert client.get("/api/stream", params={"since": 0}).status_code == 401


class TestStatelessApiLayer:
    def test_rebuilding_the_app_loses_nothing(self, plane):
        plane.start()
        first = TestClient(create_app(plane))
        body = fixture_json("directive_cpcon3.json")
        directive_id = first.post("/api/directives", json=body).json()["directive_id"]
        plane.pump(500)
        # simulate an API-layer restart: new app instance over the same plane
        second = TestClient(create_app(plane))
        record = second.get(f"/api/directives/{directive_id}").json()
        assert record["status"] == "verified"
        assert int(second.get("/api/state").headers["x-snapshot-version"]) > 0


def read_sse_frames(response, limit: int, timeout_s: float = 10.0):
    """Collect (id, event, data) tuples from an open SSE response."""
    frames = []
    current: dict[str, str] = {}
    start = time.monotonic()
    for line in response.iter_lines():
        if time.monotonic() - start > timeout_s:
            break
        if line.startswith("id:"):
            current["id"] = line[3:].strip()
        elif line.startswith("event:"):
            current["event"] = line[6:].strip()
        elif line.startswith("data:"):
            current["data"] = line[5:].strip()
        elif line == "" and "id" in current:
            frames.append(current)
            current = {}
            if len(frames) >= limit:
                break
    return frames


class TestStream:
    def test_stream_matches_audit_order_bytewise(self, live_server, plane):
        drive_dns_dos(plane)
        audit = plane.audit_since(0)
        assert audit
        with live_server.stream("GET", "/api/stream", params={"since": 0}) as resp:
            frames = read_sse_frames(resp, limit=len(audit))
        assert [int(f["id"]) for f in frames] == [e["seq"] for e in audit]
        for frame, entry in zip(frames, audit):
            assert frame["data"] == json.dumps(entry, sort_keys=True)
            assert frame["event"] == entry["category"]

    def test_reconnect_with_cursor_no_duplicates_no_gaps(self, live_server, plane):
        drive_dns_dos(plane)
        audit = plane.audit_since(0)
        cut = len(audit) // 2
        with live_server.stream("GET", "/api/stream", params={"since": 0}) as resp:
            first = read_sse_frames(resp, limit=cut)
        cursor = int(first[-1]["id"])
        with live_server.stream("GET", "/api/stream", params={"since": cursor}) as resp:
            rest = read_sse_frames(resp, limit=len(audit) - cut)
        ids = [int(f["id"]) for f in first + rest]
        assert ids == [e["seq"] for e in audit]

    def test_idle_stream_heartbeats(self, live_server):
        saw_heartbeat = False
        with live_server.stream("GET", "/api/stream", params={"since": 0}) as resp:
            start = time.monotonic()
            for line in resp.iter_lines():
                if line.startswith(": heartbeat"):
                    saw_heartbeat = True
                    break
                if time.monotonic() - start > 8:
                    break
        assert saw_heartbeat

    def test_live_frames_reach_open_stream(self, live_server, plane):
        cursor = plane.enclave.orchestrator.version  # tail only
        timer = threading.Timer(0.3, drive_dns_dos, args=(plane,))
        timer.start()
        try:
            with live_server.stream("GET", "/api/stream", params={"since": cursor}) as resp:
                frames = read_sse_frames(resp, limit=1)
            assert frames and frames[0]["event"] == "event"
        finally:
            timer.join()

    def test_mutation_visible_by_poll_within_its_stream_version(self, client, plane):
        drive_dns_dos(plane)
        audit = plane.audit_since(0)
        last_seq = audit[-1]["seq"]
        snap_version = int(client.get("/api/state").headers["x-snapshot-version"])
        assert snap_version >= last_seq
