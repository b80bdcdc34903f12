"""Host agents and the agent<->orchestrator control channel.

Agents are in-process actors, but every control message crosses a framed
JSON boundary (validated, serialized, delivered over the virtual clock) so
the wire schema stays honest. The control channel is out-of-band: router
rules and host isolation never filter it.
"""

from __future__ import annotations

import json
from typing import Any, Callable, Mapping

from cpcon.errors import (
    DuplicateRegistrationError,
    MalformedJsonError,
    OrchestratorUnreachableError,
)
from cpcon.netem.clock import VirtualClock
from cpcon.netem.network import Flow, Network
from cpcon.policy.model import Alert, CpconLevel, Event
from cpcon.policy.wire import event_to_obj, parse_event
from cpcon.agents.modules import (
    ALLOW,
    DENY,
    ModuleSignal,
    SecurityModule,
    build_module,
)

FRAME_TYPES = ("register", "event", "deploy", "ack", "level")

#: src marker for orchestrator-originated frames
ORCHESTRATOR_SRC = 0


def validate_frame(frame: Mapping[str, Any]) -> dict[str, Any]:
    """Enforce the wire schema; returns the frame as decoded plain data."""
    if not isinstance(frame, Mapping):
        raise MalformedJsonError(f"frame must be an object, got {type(frame).__name__}")
    if frame.get("type") not in FRAME_TYPES:
        raise MalformedJsonError(f"bad frame type {frame.get('type')!r}")
    if not isinstance(frame.get("payload"), Mapping):
        raise MalformedJsonError("frame payload must be an object")
    try:
        encoded = json.dumps(frame, sort_keys=True)
    except (TypeError, ValueError) as exc:
        raise MalformedJsonError(f"frame not JSON-serializable: {exc}") from exc
    return json.loads(encoded)


class ControlChannel:
    """Out-of-band message fabric between agents and the orchestrator.

    Per-destination FIFO ordering falls out of the virtual clock's
    (timestamp, sequence) discipline. A host may be given extra latency
    (delayed-ack fault); taking the channel offline makes sends raise so
    agents queue and retry.
    """

    def __init__(self, clock: VirtualClock, latency_ms: int = 1):
        self.clock = clock
        self.latency_ms = latency_ms
        self.online = True
        self.frames_sent = 0
        self._orchestrator_rx: Callable[[dict], None] | None = None
        self._agent_rx: dict[int, Callable[[dict], None]] = {}
        self._extra_delay: dict[int, int] = {}

    def bind_orchestrator(self, rx: Callable[[dict], None]) -> None:
        self._orchestrator_rx = rx

    def bind_agent(self, host_id: int, rx: Callable[[dict], None]) -> None:
        self._agent_rx[host_id] = rx

    def set_extra_delay(self, host_id: int, extra_ms: int) -> None:
        self._extra_delay[host_id] = max(0, extra_ms)

    def _delay_for(self, host_id: int) -> int:
        return self.latency_ms + self._extra_delay.get(host_id, 0)

    def to_orchestrator(self, frame: Mapping[str, Any]) -> None:
        frame = validate_frame(frame)
        if not self.online or self._orchestrator_rx is None:
            raise OrchestratorUnreachableError("control channel is offline")
        self.frames_sent += 1
        delay = self._delay_for(int(frame.get("src", ORCHESTRATOR_SRC)))
        self.clock.schedule_in(delay, self._orchestrator_rx, frame)

    def to_agent(self, host_id: int, frame: Mapping[str, Any]) -> None:
        frame = validate_frame(frame)
        rx = self._agent_rx.get(host_id)
        if rx is None:
            raise OrchestratorUnreachableError(f"no agent bound for host {host_id}")
        self.frames_sent += 1
        self.clock.schedule_in(self._delay_for(host_id), rx, frame)


class HostAgent:
    """Serial per-host actor hosting security modules.

    Flows for the host are processed in order: observation (may raise
    alerts), then one combined enforcement vote, then any signals produced
    by enforcement itself.
    """

    def __init__(self, network: Network, host_name: str, channel: ControlChannel):
        self.network = network
        self.host = network.topology.host_by_name(host_name)
        self.host_id = self.host.host_id
        self.channel = channel
        self.current_level = CpconLevel(5)
        self.modules: dict[str, SecurityModule] = {}
        self.prebuilt: set[str] = set()
        self.registered = False
        self.crashed = False
        self._module_seq = 0
        self._outbox: list[dict] = []
        channel.bind_agent(self.host_id, self.handle_control)

    # --- registration -----------------------------------------------------

    def register(self) -> None:
        if self.registered:
            raise DuplicateRegistrationError(f"host {self.host_id} already registered")
        self.registered = True
        self._send(
            {
                "type": "register",
                "src": self.host_id,
                "payload": {
                    "host_id": self.host_id,
                    "name": self.host.name,
                    "subnet": self.host.subnet,
                    "role": self.host.role,
                },
            }
        )

    # --- control plane ------------------------------------------------------

    def handle_control(self, frame: Mapping[str, Any]) -> None:
        frame = validate_frame(frame)
        payload = frame["payload"]
        if frame["type"] == "level":
            self.current_level = CpconLevel(int(payload["cpcon_level"]))
        elif frame["type"] == "deploy":
            self._handle_deploy(payload)
        elif frame["type"] == "ack":
            pass  # registration acknowledgment; nothing to do agent-side
        self._flush_outbox()

    def _handle_deploy(self, payload: Mapping[str, Any]) -> None:
        op = payload.get("op", "deploy")
        kind = payload["kind"]
        now = self.network.clock.now_ms
        if op == "prebuild":
            self.prebuilt.add(kind)
            module_id = None
        else:
            module = self._install(kind, payload.get("params", {}))
            module_id = module.module_id
        self._send(
            {
                "type": "ack",
                "src": self.host_id,
                "payload": {
                    "ref": payload.get("ref"),
                    "host_id": self.host_id,
                    "op": op,
                    "kind": kind,
                    "module_id": module_id,
                    "deployed_at": now,
                },
            }
        )

    def _install(self, kind: str, params: Mapping[str, Any]) -> SecurityModule:
        """Build then swap, so no flow ever sees zero or two modules of a kind."""
        self._module_seq += 1
        module_id = f"{kind}-{self.host_id}-{self._module_seq}"
        module = build_module(kind, module_id, self.host_id, params, self.network.clock.now_ms)
        self.modules[kind] = module
        if kind == "isolate":
            self.network.set_isolated(self.host_id, True)
        return module

    def deploy_local(self, kind: str, params: Mapping[str, Any] | None = None) -> SecurityModule:
        """Direct install path for scenario baselines (no orchestrator hop)."""
        return self._install(kind, params or {})

    # --- data plane --------------------------------------------------------

    def process_flow(self, flow: Flow) -> tuple[str, str | None]:
        """Observe and enforce one flow originating at this host.

        Returns (decision, deciding module kind). A crashed agent is inert:
        flows pass through unobserved.
        """
        if self.crashed:
            return ALLOW, None
        now = self.network.clock.now_ms
        ordered = [self.modules[k] for k in sorted(self.modules)]
        for module in ordered:
            signal = module.observe(flow, now)
            if signal is not None:
                self._emit_signal(signal)
        decision, decided_by = ALLOW, None
        for module in ordered:
            vote = module.enforce(flow, now)
            if vote == DENY:
                decision, decided_by = DENY, module.kind
                break
            if vote != ALLOW and decision == ALLOW:
                decision, decided_by = vote, module.kind
        for module in ordered:
            for signal in module.drain_signals():
                self._emit_signal(signal)
        return decision, decided_by

    # --- events ---------------------------------------------------------------

    def _emit_signal(self, signal: ModuleSignal) -> None:
        self.emit_event(signal.alert, list(signal.actions_taken))

    def emit_event(self, alert: Alert, actions_taken: list[str]) -> Event:
        """Send an event upstream; queues and retries if the channel is down."""
        event = Event(alert=alert, cpcon_level=self.current_level, actions_taken=tuple(actions_taken))
        parse_event(event_to_obj(event))  # boundary check: stays wire-clean
        self._send({"type": "event", "src": self.host_id, "payload": event_to_obj(event)})
        return event

    def _send(self, frame: dict) -> None:
        # everything rides the outbox so retries stay FIFO
        self._outbox.append(frame)
        self._flush_outbox()

    def _flush_outbox(self) -> None:
        while self._outbox:
            frame = self._outbox[0]
            try:
                self.channel.to_orchestrator(frame)
            except OrchestratorUnreachableError:
                return
            self._outbox.pop(0)

    # --- introspection -----------------------------------------------------------

    def active_module_kinds(self) -> list[str]:
        return sorted(self.modules)
