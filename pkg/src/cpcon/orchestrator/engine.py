"""The orchestration engine.

Single logical event loop: agent frames, operator submissions, and timer
callbacks are serialized through the virtual clock, so a given input
sequence always produces byte-identical repository contents. The engine
correlates host events against declarative response rules, executes
directives action-by-action (router rules synchronously, module deploys
acknowledged over the control channel), pushes level updates, and verifies
enforcement with reachability scans before a record may claim "verified".
"""

from __future__ import annotations

import json
import logging
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

from cpcon.agents.agent import ORCHESTRATOR_SRC, ControlChannel
from cpcon.agents.modules import build_module
from cpcon.errors import (
    AlreadyResolvedError,
    CpconError,
    DeescalationError,
    DuplicateRegistrationError,
    InvalidParamsError,
    UnknownHostError,
    UnknownSubnetError,
    UnknownTargetError,
)
from cpcon.netem.network import Network
from cpcon.netem.rules import Direction, RouterRule, RuleMatch, Verdict
from cpcon.orchestrator.policyrules import PolicyRules, load_policy_rules
from cpcon.orchestrator.records import (
    ActionOutcome,
    DirectiveRecord,
    DirectiveStatus,
    EventRecord,
    Recommendation,
    RecommendationState,
)
from cpcon.orchestrator.verification import (
    WEB_PORTS,
    expected_effects,
    merge_expected,
    run_verification_scan,
)
from cpcon.policy.model import (
    CpconLevel,
    Directive,
    Event,
    SelectorKind,
    ThreatCategory,
    Verb,
)
from cpcon.policy.targets import resolve_targets
from cpcon.policy.wire import parse_event

logger = logging.getLogger("cpcon.orchestrator")


@dataclass
class OrchestratorConfig:
    baseline_level: int = 5
    verification_delay_ms: int = 100
    verification_retry_ms: int = 500
    rules: PolicyRules | None = None

    def policy_rules(self) -> PolicyRules:
        return self.rules if self.rules is not None else load_policy_rules()


@dataclass
class _HostView:
    """The orchestrator's bookkeeping for one managed host."""

    host_id: int
    name: str
    subnet: str
    role: str
    status: str = "connected"
    modules: set[str] = field(default_factory=set)
    prebuilt: set[str] = field(default_factory=set)


class _DirectiveExecution:
    """Drives one directive through its actions, pausing on deploy acks."""

    def __init__(self, orch: "Orchestrator", record: DirectiveRecord):
        self.orch = orch
        self.record = record
        self.action_idx = -1
        self.pending_refs: set[str] = set()
        self.failed = False

    def start(self) -> None:
        self.record.transition(DirectiveStatus.EXECUTING, self.orch.now_ms)
        self.orch._audit_record_transition(self.record)
        for action in self.record.directive.actions:
            targets = ",".join(sel.token() for sel in action.targets)
            self.record.per_action.append(ActionOutcome(f"{action.verb.value} -> {targets}"))
        self.advance()

    def advance(self) -> None:
        while True:
            self.action_idx += 1
            if self.action_idx >= len(self.record.directive.actions):
                self._finish()
                return
            action = self.record.directive.actions[self.action_idx]
            outcome = self.record.per_action[self.action_idx]
            try:
                deploys = self.orch._apply_action(self.record, action)
            except CpconError as exc:
                outcome.status = "failed"
                outcome.detail = f"{type(exc).__name__}: {exc}"
                self.failed = True
                continue
            if deploys:
                self.pending_refs = set(deploys)
                return  # resumes from on_ack
            outcome.status = "ok"

    def on_ack(self, ref: str) -> None:
        self.pending_refs.discard(ref)
        if not self.pending_refs:
            self.record.per_action[self.action_idx].status = "ok"
            self.advance()

    def _finish(self) -> None:
        self.orch._executions.pop(self.record.directive_id, None)
        if self.failed:
            self.record.transition(DirectiveStatus.FAILED, self.orch.now_ms)
            self.orch._audit_record_transition(self.record)
            return
        self.record.transition(DirectiveStatus.IMPLEMENTED, self.orch.now_ms)
        self.orch._audit_record_transition(self.record)
        self.orch._set_level(self.record.directive.cpcon_level, self.record.directive_id)
        self.orch._schedule_verification(self.record)


class Orchestrator:
    """Central CPCON engine bound to one emulated network."""

    def __init__(
        self,
        network: Network,
        channel: ControlChannel,
        config: OrchestratorConfig | None = None,
    ):
        self.network = network
        self.clock = network.clock
        self.channel = channel
        self.config = config or OrchestratorConfig()
        self.rules = self.config.policy_rules()
        self.current_level = CpconLevel(self.config.baseline_level)
        self.host_id = network.topology.orchestrator_host().host_id

        self.hosts: dict[int, _HostView] = {}
        self.events: list[EventRecord] = []
        self.records: list[DirectiveRecord] = []
        self.recommendations: list[Recommendation] = []
        self.audit_log: list[dict[str, Any]] = []

        self.scan_available = True
        self._executions: dict[int, _DirectiveExecution] = {}
        self._pending_deploy_refs: dict[str, dict[str, Any]] = {}
        self._next = {"event": 0, "directive": 0, "rec": 0, "rule": 0, "ref": 0, "audit": 0}
        self._audit_cond = threading.Condition()

        channel.bind_orchestrator(self.receive_frame)

    # --- clock helpers ---------------------------------------------------

    @property
    def now_ms(self) -> int:
        return self.clock.now_ms

    def _next_id(self, kind: str) -> int:
        self._next[kind] += 1
        return self._next[kind]

    # --- audit -------------------------------------------------------------

    def audit(self, kind: str, category: str, payload: Mapping[str, Any]) -> dict[str, Any]:
        entry = {
            "seq": self._next_id("audit"),
            "ts": self.now_ms,
            "kind": kind,
            "category": category,
            "payload": dict(payload),
        }
        with self._audit_cond:
            self.audit_log.append(entry)
            self._audit_cond.notify_all()
        return entry

    def wait_for_audit(self, after_seq: int, timeout: float) -> list[dict[str, Any]]:
        """Block until audit entries beyond ``after_seq`` exist (API streaming)."""
        with self._audit_cond:
            self._audit_cond.wait_for(
                lambda: self.audit_log and self.audit_log[-1]["seq"] > after_seq,
                timeout=timeout,
            )
            return [e for e in self.audit_log if e["seq"] > after_seq]

    @property
    def version(self) -> int:
        return self._next["audit"]

    def _audit_record_transition(self, record: DirectiveRecord) -> None:
        self.audit(
            f"directive_{record.status.value}",
            "record-transition",
            {
                "directive_id": record.directive_id,
                "record": record.summary(),
                "cpcon_level": self.current_level.value,
                "verification": record.verification,
            },
        )

    # --- registration ---------------------------------------------------------

    def receive_frame(self, frame: Mapping[str, Any]) -> None:
        """Entry point for all agent-originated control frames."""
        ftype = frame.get("type")
        payload = frame.get("payload", {})
        if ftype == "register":
            try:
                self._handle_register(payload)
            except DuplicateRegistrationError as exc:
                logger.warning("registration rejected: %s", exc)
                self.audit(
                    "registration_rejected",
                    "host",
                    {"host_id": payload.get("host_id"), "reason": str(exc)},
                )
        elif ftype == "event":
            try:
                self.ingest_event(parse_event(payload))
            except UnknownHostError:
                pass  # already quarantined and audited
        elif ftype == "ack":
            self._handle_ack(payload)

    def _handle_register(self, payload: Mapping[str, Any]) -> None:
        host_id = int(payload["host_id"])
        if host_id in self.hosts:
            raise DuplicateRegistrationError(f"host {host_id} already registered")
        self.network.topology.host(host_id)  # must exist
        view = _HostView(
            host_id=host_id,
            name=str(payload.get("name", host_id)),
            subnet=str(payload.get("subnet", "")),
            role=str(payload.get("role", "generic")),
        )
        self.hosts[host_id] = view
        self.audit(
            "agent_registered",
            "host",
            {"host_id": host_id, "name": view.name, "subnet": view.subnet, "role": view.role},
        )
        self.channel.to_agent(
            host_id,
            {
                "type": "ack",
                "src": ORCHESTRATOR_SRC,
                "payload": {"ref": "register", "host_id": host_id},
            },
        )
        self._push_level(host_id)

    # --- event ingestion -----------------------------------------------------

    def ingest_event(self, event: Event) -> list[dict[str, Any]]:
        """Record an event and apply the declarative response rules.

        Returns descriptors of the responses taken (deploys and
        recommendations). Events from unknown hosts are quarantined and
        the error re-raised so callers cannot mistake them for handled.
        """
        seq = self._next_id("event")
        record = EventRecord(
            event_id=seq, event=event, received_at=self.now_ms, seq=seq
        )
        host_id = event.alert.host_id
        if host_id not in self.hosts:
            record.quarantined = True
            record.correlation_tags.append("unknown_host")
            self.events.append(record)
            self.audit(
                "event_quarantined",
                "event",
                {"event_id": record.event_id, "event": record.to_obj()["event"]},
            )
            raise UnknownHostError(f"event from unregistered host {host_id}")
        self.events.append(record)
        self.audit(
            "event_ingested",
            "event",
            {"event_id": record.event_id, "event": record.to_obj()["event"]},
        )

        responses: list[dict[str, Any]] = []
        event_type = event.alert.event_type
        rule = self.rules.response_for(event_type)
        suppressed = False
        if rule is not None:
            if rule.skip_if_active and self._module_active_or_pending(host_id, rule.deploy_kind):
                suppressed = True
                self.audit(
                    "response_suppressed",
                    "enforcement",
                    {
                        "event_id": record.event_id,
                        "host_id": host_id,
                        "kind": rule.deploy_kind,
                        "reason": "module already active",
                    },
                )
            else:
                ref = self._send_deploy(
                    host_id,
                    rule.deploy_kind,
                    rule.deploy_params,
                    cause={"event_id": record.event_id},
                )
                record.correlation_tags.append(f"deploy:{rule.deploy_kind}")
                responses.append(
                    {"response": "deploy", "host_id": host_id, "kind": rule.deploy_kind, "ref": ref}
                )

        if not suppressed:
            rec = self.recommend_escalation(event_type, [record.event_id])
            if rec is not None:
                responses.append(
                    {
                        "response": "recommendation",
                        "rec_id": rec.rec_id,
                        "proposed_level": rec.proposed_level.value,
                    }
                )
        return responses

    def _module_active_or_pending(self, host_id: int, kind: str) -> bool:
        view = self.hosts.get(host_id)
        if view is not None and kind in view.modules:
            return True
        return any(
            p["host_id"] == host_id and p["kind"] == kind and p["op"] == "deploy"
            for p in self._pending_deploy_refs.values()
        )

    # --- module deployment ------------------------------------------------------

    def _send_deploy(
        self,
        host_id: int,
        kind: str,
        params: Mapping[str, Any],
        cause: Mapping[str, Any],
        op: str = "deploy",
    ) -> str:
        """Validate and dispatch one module deploy; returns its ref."""
        if host_id not in self.hosts:
            raise UnknownHostError(f"cannot deploy to unregistered host {host_id}")
        if op == "deploy":
            # surface InvalidParams to the caller, not to the remote agent
            build_module(kind, "probe", host_id, params, 0)
        ref = f"ref-{self._next_id('ref')}"
        self._pending_deploy_refs[ref] = {
            "host_id": host_id,
            "kind": kind,
            "op": op,
            "cause": dict(cause),
        }
        self.channel.to_agent(
            host_id,
            {
                "type": "deploy",
                "src": ORCHESTRATOR_SRC,
                "payload": {"ref": ref, "op": op, "kind": kind, "params": dict(params)},
            },
        )
        return ref

    def deploy_module(
        self,
        host_id: int,
        kind: str,
        params: Mapping[str, Any] | None = None,
        cause: Mapping[str, Any] | None = None,
    ) -> str:
        """Deploy a module to a registered, connected host.

        Returns the dispatch ref; the acknowledgment (host_id, module_id,
        deployed_at) lands on the audit log once the agent confirms.
        """
        return self._send_deploy(host_id, kind, params or {}, cause or {"baseline": True})

    def _handle_ack(self, payload: Mapping[str, Any]) -> None:
        ref = payload.get("ref")
        pending = self._pending_deploy_refs.pop(ref, None)
        if pending is None:
            return
        host_id = pending["host_id"]
        view = self.hosts.get(host_id)
        if view is not None:
            if pending["op"] == "prebuild":
                view.prebuilt.add(pending["kind"])
            else:
                view.modules.add(pending["kind"])
        self.audit(
            "module_deployed" if pending["op"] == "deploy" else "module_prebuilt",
            "enforcement",
            {
                "host_id": host_id,
                "kind": pending["kind"],
                "module_id": payload.get("module_id"),
                "cause": pending["cause"],
            },
        )
        directive_id = pending["cause"].get("directive_id")
        if directive_id is not None and directive_id in self._executions:
            self._executions[directive_id].on_ack(ref)

    # --- recommendations -----------------------------------------------------------

    def recommend_escalation(
        self, event_type: str, triggering_events: list[int]
    ) -> Recommendation | None:
        """Apply the escalation rule table against the current posture."""
        rule = self.rules.escalation_for(event_type, self.current_level.value)
        if rule is None:
            return None
        proposed = CpconLevel(rule.proposed_level)
        if not proposed.is_more_restrictive_than(self.current_level):
            return None
        for rec in self.recommendations:
            if (
                rec.state is RecommendationState.PENDING
                and rec.proposed_level == proposed
            ):
                return None
        rec = Recommendation(
            rec_id=self._next_id("rec"),
            proposed_level=proposed,
            threat=ThreatCategory(rule.threat),
            triggering_events=list(triggering_events),
            created_at=self.now_ms,
        )
        self.recommendations.append(rec)
        self.audit("recommendation_created", "recommendation", rec.to_obj())
        return rec

    def _find_recommendation(self, rec_id: int) -> Recommendation:
        for rec in self.recommendations:
            if rec.rec_id == rec_id:
                return rec
        raise KeyError(f"no recommendation {rec_id}")

    def approve_recommendation(self, rec_id: int, operator: str = "operator") -> DirectiveRecord:
        """Execute the directive template bound to a pending recommendation."""
        rec = self._find_recommendation(rec_id)
        if rec.state is not RecommendationState.PENDING:
            raise AlreadyResolvedError(f"recommendation {rec_id} is {rec.state.value}")
        directive = self.rules.template(rec.proposed_level.value, rec.threat.name)
        if directive is None:
            raise UnknownTargetError(
                f"no directive template for level {rec.proposed_level} / {rec.threat}"
            )
        rec.state = RecommendationState.APPROVED
        record = self.submit_directive(directive, issuer=operator)
        rec.directive_id = record.directive_id
        self.audit("recommendation_approved", "recommendation", rec.to_obj())
        return record

    def dismiss_recommendation(self, rec_id: int, operator: str = "operator") -> Recommendation:
        rec = self._find_recommendation(rec_id)
        if rec.state is not RecommendationState.PENDING:
            raise AlreadyResolvedError(f"recommendation {rec_id} is {rec.state.value}")
        rec.state = RecommendationState.DISMISSED
        self.audit("recommendation_dismissed", "recommendation", rec.to_obj())
        return rec

    # --- directives ---------------------------------------------------------------

    def submit_directive(
        self, directive: Directive, issuer: str, allow_deescalation: bool = False
    ) -> DirectiveRecord:
        """Accept a directive; execution starts on the next clock tick."""
        if directive.cpcon_level.value > self.current_level.value and not allow_deescalation:
            raise DeescalationError(
                f"directive lowers posture {self.current_level} -> "
                f"{directive.cpcon_level} without allow_deescalation"
            )
        record = DirectiveRecord(
            directive_id=self._next_id("directive"),
            directive=directive,
            issuer=issuer,
        )
        record.timestamps["received"] = self.now_ms
        self.records.append(record)
        self._audit_record_transition(record)
        execution = _DirectiveExecution(self, record)
        self._executions[record.directive_id] = execution
        self.clock.schedule_in(0, execution.start)
        return record

    def execute_directive(self, directive: Directive, issuer: str) -> DirectiveRecord:
        """Submit and drive a directive through verification synchronously.

        Advances the virtual clock, so never call this from inside a clock
        callback; scheduled code should use :meth:`submit_directive`.
        """
        record = self.submit_directive(directive, issuer)
        self.clock.advance(0)
        # acks and the verification scan live a few virtual ms out
        budget = self.config.verification_delay_ms + 1000
        while not record.terminal and budget > 0:
            self.clock.advance(1)
            budget -= 1
        return record

    def _apply_action(self, record: DirectiveRecord, action) -> list[str]:
        """Apply one action; returns refs of deploys awaiting acknowledgment."""
        try:
            return self._apply_action_inner(record, action)
        except (UnknownSubnetError, UnknownHostError) as exc:
            raise UnknownTargetError(str(exc)) from exc

    def _apply_action_inner(self, record: DirectiveRecord, action) -> list[str]:
        topo = self.network.topology
        cause = {"directive_id": record.directive_id}
        refs: list[str] = []
        if action.verb is Verb.BLOCK_WEB_TRAFFIC:
            for sel in action.targets:
                if sel.kind is not SelectorKind.SUBNET:
                    raise UnknownTargetError(
                        f"block_web_traffic requires subnet targets, got {sel.token()}"
                    )
                router = topo.router_for_subnet(sel.subnet_name)
                self._apply_rule(
                    router.name,
                    RuleMatch(subnet=sel.subnet_name, direction=Direction.BOTH, ports=WEB_PORTS),
                    cause,
                )
        elif action.verb is Verb.SERVER_MONITOR:
            for host_id in self._resolved(action.targets, topo):
                if topo.host(host_id).role != "server":
                    continue
                refs.append(
                    self._send_deploy(host_id, "server_monitor", action.params, cause)
                )
        elif action.verb is Verb.BUILD_ISOLATE_MOD:
            for host_id in self._resolved(action.targets, topo):
                refs.append(
                    self._send_deploy(host_id, "isolate", {}, cause, op="prebuild")
                )
        elif action.verb is Verb.ISOLATE:
            for sel in action.targets:
                if sel.kind is SelectorKind.SUBNET:
                    router = topo.router_for_subnet(sel.subnet_name)
                    self._apply_rule(
                        router.name,
                        RuleMatch(subnet=sel.subnet_name, direction=Direction.BOTH, ports=None),
                        cause,
                        source_exception=self.host_id,
                    )
                for host_id in sorted(resolve_targets(sel, topo)):
                    if topo.host(host_id).role == "orchestrator":
                        continue  # never cut off the control plane
                    refs.append(self._send_deploy(host_id, "isolate", {}, cause))
        elif action.verb is Verb.DEPLOY_MODULE:
            params = dict(action.params)
            kind = params.pop("kind", None)
            if not kind:
                raise InvalidParamsError("deploy_module requires params.kind")
            for host_id in self._resolved(action.targets, topo):
                refs.append(self._send_deploy(host_id, kind, params, cause))
        return refs

    def _resolved(self, targets, topo) -> list[int]:
        out: set[int] = set()
        for sel in targets:
            out |= resolve_targets(sel, topo)
        return sorted(out)

    def _apply_rule(
        self,
        router_name: str,
        match: RuleMatch,
        cause: Mapping[str, Any],
        source_exception: int | None = None,
    ) -> int:
        rule = RouterRule(
            rule_id=self._next_id("rule"),
            match=match,
            verdict=Verdict.BLOCK,
            source_exception=source_exception,
        )
        version = self.network.apply_rule(router_name, rule)
        self.audit(
            "rule_applied",
            "enforcement",
            {
                "router": router_name,
                "rule": rule.to_obj(),
                "version": version,
                "cause": dict(cause),
            },
        )
        return version

    def _set_level(self, level: CpconLevel, directive_id: int) -> None:
        if level != self.current_level:
            self.current_level = level
            self.audit(
                "level_changed",
                "record-transition",
                {"cpcon_level": level.value, "directive_id": directive_id},
            )
        for host_id in sorted(self.hosts):
            self._push_level(host_id)

    def _push_level(self, host_id: int) -> None:
        self.channel.to_agent(
            host_id,
            {
                "type": "level",
                "src": ORCHESTRATOR_SRC,
                "payload": {"cpcon_level": self.current_level.value},
            },
        )

    # --- verification ------------------------------------------------------------

    def _schedule_verification(self, record: DirectiveRecord) -> None:
        self.clock.schedule_in(
            self.config.verification_delay_ms, self.verify_directive, record
        )

    def verify_directive(self, record: DirectiveRecord) -> None:
        """Scan the directive's expected footprint and settle its status."""
        if record.status is not DirectiveStatus.IMPLEMENTED:
            return
        topo = self.network.topology
        expected = expected_effects(record.directive, topo, self.host_id)
        if not self.scan_available:
            self.audit(
                "verification_deferred",
                "enforcement",
                {"directive_id": record.directive_id, "reason": "scan unavailable"},
            )
            self.clock.schedule_in(
                self.config.verification_retry_ms, self.verify_directive, record
            )
            return
        if not expected:
            record.verification = {"passed": True, "entries": 0, "mismatches": [], "vacuous": True}
            record.transition(DirectiveStatus.VERIFIED, self.now_ms)
            self._audit_record_transition(record)
            return
        passed, matrix, mismatches = run_verification_scan(self.network, expected, self.host_id)
        record.verification = {
            "passed": passed,
            "entries": len(expected),
            "mismatches": mismatches,
            "matrix_counts": matrix.counts(),
        }
        self.audit(
            "scan_performed",
            "enforcement",
            {
                "directive_id": record.directive_id,
                "entries": len(expected),
                "open": matrix.counts()["open"],
                "mismatches": len(mismatches),
            },
        )
        if passed:
            record.transition(DirectiveStatus.VERIFIED, self.now_ms)
        else:
            logger.warning(
                "directive %d failed verification: %d mismatch(es)",
                record.directive_id,
                len(mismatches),
            )
            record.transition(DirectiveStatus.FAILED, self.now_ms)
        self._audit_record_transition(record)

    def expected_matrix(self) -> dict[tuple[int, int, int], str]:
        """Recompute the posture's expected matrix from verified records."""
        return merge_expected(
            [
                expected_effects(r.directive, self.network.topology, self.host_id)
                for r in self.records
                if r.status is DirectiveStatus.VERIFIED
            ]
        )

    # --- views ------------------------------------------------------------------------

    def record_by_id(self, directive_id: int) -> DirectiveRecord | None:
        for record in self.records:
            if record.directive_id == directive_id:
                return record
        return None

    def pending_recommendations(self) -> list[Recommendation]:
        return [r for r in self.recommendations if r.state is RecommendationState.PENDING]

    def snapshot(self) -> dict[str, Any]:
        """Atomic state view for the northbound API."""
        topo = self.network.topology
        hosts = []
        for host_id in sorted(self.hosts):
            view = self.hosts[host_id]
            hosts.append(
                {
                    "host_id": host_id,
                    "name": view.name,
                    "subnet": view.subnet,
                    "status": view.status,
                    "modules": sorted(view.modules),
                    "prebuilt": sorted(view.prebuilt),
                    "isolated": topo.host(host_id).isolated if topo.has_host(host_id) else False,
                }
            )
        return {
            "cpcon_level": self.current_level.value,
            "hosts": hosts,
            "directives": [r.summary() for r in self.records],
            "pending_recommendations": [r.to_obj() for r in self.pending_recommendations()],
            "events": [e.to_obj() for e in self.events],
            "version": self.version,
        }

    # --- persistence --------------------------------------------------------------------

    def repository_obj(self) -> dict[str, Any]:
        return {
            "current_level": self.current_level.value,
            "records": [r.to_obj() for r in self.records],
            "recommendations": [r.to_obj() for r in self.recommendations],
            "events": [e.to_obj() for e in self.events],
        }

    def repository_json(self) -> str:
        return json.dumps(self.repository_obj(), indent=2, sort_keys=True) + "\n"

    def event_log_lines(self) -> list[str]:
        return [json.dumps(e.to_obj(), sort_keys=True) for e in self.events]

    def audit_log_lines(self) -> list[str]:
        return [json.dumps(e, sort_keys=True) for e in self.audit_log]

    def dump_logs(self, directory: str | Path) -> dict[str, Path]:
        """Write repository, event, audit, and flow logs under a directory."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        out = {
            "repository": directory / "policy_repository.json",
            "events": directory / "events.ndjson",
            "audit": directory / "audit.ndjson",
            "flows": directory / "flows.ndjson",
        }
        out["repository"].write_text(self.repository_json())
        out["events"].write_text("\n".join(self.event_log_lines()) + "\n")
        out["audit"].write_text("\n".join(self.audit_log_lines()) + "\n")
        out["flows"].write_text("\n".join(self.network.flow_log_lines()) + "\n")
        return out


def replay_event_log(path: str | Path) -> list[EventRecord]:
    """Rebuild event records from an events.ndjson file (startup recovery)."""
    records: list[EventRecord] = []
    for line in Path(path).read_text().splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        records.append(
            EventRecord(
                event_id=obj["event_id"],
                event=parse_event(obj["event"]),
                received_at=obj["received_at"],
                seq=obj["seq"],
                correlation_tags=list(obj.get("correlation_tags", [])),
                quarantined=bool(obj.get("quarantined", False)),
            )
        )
    return records
