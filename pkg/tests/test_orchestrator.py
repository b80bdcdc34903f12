"""Engine behavior: correlation, directive execution, verification, audit."""

from __future__ import annotations

import pytest

from cpcon.errors import (
    AlreadyResolvedError,
    DeescalationError,
    UnknownHostError,
)
from cpcon.orchestrator.records import DirectiveStatus, RecommendationState
from cpcon.orchestrator.verification import expected_effects, run_verification_scan
from cpcon.orchestrator.engine import OrchestratorConfig
from cpcon.policy.model import Alert, CpconLevel, Event
from cpcon.policy.wire import parse_directive
from cpcon.runtime import Enclave


def build_enclave(baseline=4, seed=42) -> Enclave:
    return Enclave.build(id_seed=seed, config=OrchestratorConfig(baseline_level=baseline))


def dns_dos_event(level=4) -> Event:
    return Event(alert=Alert(45189, "DNS_DoS"), cpcon_level=CpconLevel(level))


class TestIngestEvent:
    def test_dns_dos_deploys_and_recommends(self):
        enclave = build_enclave(baseline=4)
        responses = enclave.orchestrator.ingest_event(dns_dos_event())
        assert [r["response"] for r in responses] == ["deploy", "recommendation"]
        assert responses[0]["kind"] == "dns_response"
        assert responses[0]["host_id"] == 45189
        assert responses[1]["proposed_level"] == 3
        enclave.pump(5)
        assert "dns_response" in enclave.agents[45189].modules

    def test_violation_deploys_isolate_and_recommends_level2(self):
        enclave = build_enclave(baseline=3)
        web = enclave.host_id("web-server")
        responses = enclave.orchestrator.ingest_event(
            Event(alert=Alert(web, "CPCON3"), cpcon_level=CpconLevel(3))
        )
        assert [r["response"] for r in responses] == ["deploy", "recommendation"]
        assert responses[0]["kind"] == "isolate"
        assert responses[1]["proposed_level"] == 2
        enclave.pump(5)
        assert enclave.network.topology.host(web).isolated

    def test_duplicate_alert_while_module_active_is_suppressed(self):
        enclave = build_enclave(baseline=4)
        enclave.orchestrator.ingest_event(dns_dos_event())
        enclave.pump(5)
        responses = enclave.orchestrator.ingest_event(dns_dos_event())
        assert responses == []
        kinds = [e["kind"] for e in enclave.orchestrator.audit_log]
        assert "response_suppressed" in kinds

    def test_unknown_host_is_quarantined_not_dropped(self):
        enclave = build_enclave()
        with pytest.raises(UnknownHostError):
            enclave.orchestrator.ingest_event(
                Event(alert=Alert(99, "DNS_DoS"), cpcon_level=CpconLevel(4))
            )
        record = enclave.orchestrator.events[-1]
        assert record.quarantined
        assert "unknown_host" in record.correlation_tags

    def test_event_db_is_append_only_ordered(self):
        enclave = build_enclave()
        for _ in range(3):
            enclave.orchestrator.ingest_event(dns_dos_event())
            enclave.pump(2)
        seqs = [e.seq for e in enclave.orchestrator.events]
        assert seqs == sorted(seqs)


class TestExecuteDirective:
    def test_level3_directive_full_effects(self, fig8_directive):
        enclave = build_enclave(baseline=4)
        orch = enclave.orchestrator
        topo = enclave.network.topology
        record = orch.execute_directive(fig8_directive, issuer="operator")

        assert record.status is DirectiveStatus.VERIFIED
        assert [a.status for a in record.per_action] == ["ok", "ok", "ok"]
        assert orch.current_level.value == 3
        # web-block rule landed on the subnet-2 router
        assert enclave.network.tables["subnet2-router"].version == 1
        # monitors on both servers, prebuilt isolation everywhere
        for name in ("web-server", "utility-server"):
            assert "server_monitor" in enclave.agents[enclave.host_id(name)].modules
        for host in topo.managed_hosts():
            assert "isolate" in enclave.agents[host.host_id].prebuilt
        # agents saw the level push
        assert enclave.agents[45189].current_level.value == 3

    def test_level2_directive_isolates_subnet(self, fig8_directive, fig9_directive):
        enclave = build_enclave(baseline=4)
        orch = enclave.orchestrator
        topo = enclave.network.topology
        orch.execute_directive(fig8_directive, issuer="operator")
        record = orch.execute_directive(fig9_directive, issuer="operator")

        assert record.status is DirectiveStatus.VERIFIED
        assert orch.current_level.value == 2
        for host in topo.hosts_in_subnet("subnet2"):
            assert host.isolated
        router = topo.router_for_subnet("subnet2")
        matrix = enclave.network.scan(orch.host_id, [router.host_id], [22])
        assert matrix.entries[(orch.host_id, router.host_id, 22)] == "open"
        s1h1 = enclave.host_id("subnet1-host-1")
        matrix = enclave.network.scan(s1h1, [router.host_id], [22])
        assert matrix.entries[(s1h1, router.host_id, 22)] == "blocked"

    def test_unknown_subnet_fails_record_level_unchanged(self):
        enclave = build_enclave(baseline=4)
        directive = parse_directive(
            {
                "cpcon_level": 3,
                "threat": "web_applications",
                "actions": [{"verb": "block_web_traffic", "targets": ["subnet:nonexistent"]}],
            }
        )
        record = enclave.orchestrator.execute_directive(directive, issuer="operator")
        assert record.status is DirectiveStatus.FAILED
        assert "UnknownTarget" in (record.per_action[0].detail or "")
        assert enclave.orchestrator.current_level.value == 4

    def test_partial_failure_still_attempts_remaining_actions(self):
        enclave = build_enclave(baseline=4)
        directive = parse_directive(
            {
                "cpcon_level": 3,
                "threat": "web_applications",
                "actions": [
                    {"verb": "block_web_traffic", "targets": ["subnet:nonexistent"]},
                    {"verb": "server_monitor", "targets": ["all_servers"]},
                ],
            }
        )
        record = enclave.orchestrator.execute_directive(directive, issuer="operator")
        assert record.status is DirectiveStatus.FAILED
        assert [a.status for a in record.per_action] == ["failed", "ok"]
        # the independent action really did execute
        web = enclave.host_id("web-server")
        assert "server_monitor" in enclave.agents[web].modules

    def test_deescalation_needs_explicit_flag(self):
        enclave = build_enclave(baseline=3)
        directive = parse_directive(
            {
                "cpcon_level": 4,
                "threat": "web_applications",
                "actions": [{"verb": "build_isolate_mod", "targets": ["all_hosts"]}],
            }
        )
        with pytest.raises(DeescalationError):
            enclave.orchestrator.submit_directive(directive, issuer="operator")
        record = enclave.orchestrator.submit_directive(
            directive, issuer="operator", allow_deescalation=True
        )
        enclave.pump(500)
        assert record.status is DirectiveStatus.VERIFIED

    def test_status_timestamps_are_monotone(self, fig8_directive):
        enclave = build_enclave(baseline=4)
        record = enclave.orchestrator.execute_directive(fig8_directive, issuer="operator")
        ts = record.timestamps
        assert ts["received"] <= ts["executing"] <= ts["implemented"] <= ts["verified"]


class TestVerifyDirective:
    def test_fault_injected_router_yields_failed_not_verified(self, fig8_directive):
        enclave = build_enclave(baseline=4)
        enclave.network.set_rule_dropping("subnet2-router", True)
        record = enclave.orchestrator.execute_directive(fig8_directive, issuer="operator")
        assert record.status is DirectiveStatus.FAILED
        mismatch_ports = {m["port"] for m in record.verification["mismatches"]}
        assert mismatch_ports & {80, 443}
        observed = {m["observed"] for m in record.verification["mismatches"]}
        assert observed == {"open"}

    def test_monitor_only_directive_verifies_vacuously(self):
        enclave = build_enclave(baseline=4)
        directive = parse_directive(
            {
                "cpcon_level": 4,
                "threat": "web_applications",
                "actions": [{"verb": "build_isolate_mod", "targets": ["all_hosts"]}],
            }
        )
        record = enclave.orchestrator.execute_directive(directive, issuer="operator")
        assert record.status is DirectiveStatus.VERIFIED
        assert record.verification == {
            "passed": True,
            "entries": 0,
            "mismatches": [],
            "vacuous": True,
        }

    def test_scan_unavailable_defers_and_retries(self, fig8_directive):
        enclave = build_enclave(baseline=4)
        orch = enclave.orchestrator
        orch.scan_available = False
        record = orch.submit_directive(fig8_directive, issuer="operator")
        enclave.pump(200)
        assert record.status is DirectiveStatus.IMPLEMENTED  # stays put
        orch.scan_available = True
        enclave.pump(600)
        assert record.status is DirectiveStatus.VERIFIED

    def test_no_false_verification_recheck(self, fig8_directive):
        enclave = build_enclave(baseline=4)
        orch = enclave.orchestrator
        record = orch.execute_directive(fig8_directive, issuer="operator")
        assert record.status is DirectiveStatus.VERIFIED
        expected = expected_effects(record.directive, enclave.network.topology, orch.host_id)
        passed, _, mismatches = run_verification_scan(enclave.network, expected, orch.host_id)
        assert passed and not mismatches


class TestRecommendations:
    def test_rule_table_matches(self):
        enclave = build_enclave(baseline=4)
        orch = enclave.orchestrator
        rec = orch.recommend_escalation("DNS_DoS", [1])
        assert rec is not None
        assert rec.proposed_level.value == 3
        assert rec.threat.name == "web_applications"

    def test_no_rule_no_recommendation(self):
        enclave = build_enclave(baseline=4)
        assert enclave.orchestrator.recommend_escalation("weird_event", [1]) is None

    def test_rule_gated_on_current_level(self):
        enclave = build_enclave(baseline=3)
        # DNS_DoS escalation applies at level >= 4 only
        assert enclave.orchestrator.recommend_escalation("DNS_DoS", [1]) is None

    def test_pending_same_level_deduplicated(self):
        enclave = build_enclave(baseline=4)
        orch = enclave.orchestrator
        assert orch.recommend_escalation("DNS_DoS", [1]) is not None
        assert orch.recommend_escalation("DNS_DoS", [2]) is None

    def test_recommendations_always_strictly_more_restrictive(self):
        for level in range(1, 6):
            enclave = build_enclave(baseline=level)
            for event_type in ("DNS_DoS", "CPCON3"):
                rec = enclave.orchestrator.recommend_escalation(event_type, [1])
                if rec is not None:
                    assert rec.proposed_level.value < level

    def test_approve_executes_bound_template(self):
        enclave = build_enclave(baseline=4)
        orch = enclave.orchestrator
        rec = orch.recommend_escalation("DNS_DoS", [1])
        record = orch.approve_recommendation(rec.rec_id)
        enclave.pump(500)
        assert record.status is DirectiveStatus.VERIFIED
        assert record.directive.cpcon_level.value == 3
        assert rec.state is RecommendationState.APPROVED
        assert rec.directive_id == record.directive_id

    def test_double_approve_rejected(self):
        enclave = build_enclave(baseline=4)
        orch = enclave.orchestrator
        rec = orch.recommend_escalation("DNS_DoS", [1])
        orch.approve_recommendation(rec.rec_id)
        with pytest.raises(AlreadyResolvedError):
            orch.approve_recommendation(rec.rec_id)

    def test_unknown_recommendation(self):
        enclave = build_enclave()
        with pytest.raises(KeyError):
            enclave.orchestrator.approve_recommendation(404)

    def test_dismiss(self):
        enclave = build_enclave(baseline=4)
        orch = enclave.orchestrator
        rec = orch.recommend_escalation("DNS_DoS", [1])
        orch.dismiss_recommendation(rec.rec_id)
        assert rec.state is RecommendationState.DISMISSED
        with pytest.raises(AlreadyResolvedError):
            orch.approve_recommendation(rec.rec_id)


class TestAuditInvariants:
    def test_every_enforcement_entry_has_exactly_one_cause(self, fig8_directive):
        enclave = build_enclave(baseline=4)
        orch = enclave.orchestrator
        orch.ingest_event(dns_dos_event())
        enclave.pump(10)
        orch.execute_directive(fig8_directive, issuer="operator")
        for entry in orch.audit_log:
            if entry["kind"] in ("module_deployed", "module_prebuilt", "rule_applied"):
                cause = entry["payload"]["cause"]
                assert len(cause) == 1
                assert set(cause) <= {"event_id", "directive_id", "baseline"}

    def test_serial_determinism_byte_identical_repository(self, fig8_directive, fig9_directive):
        def run() -> str:
            enclave = build_enclave(baseline=4, seed=7)
            orch = enclave.orchestrator
            orch.ingest_event(dns_dos_event())
            enclave.pump(10)
            orch.execute_directive(fig8_directive, issuer="operator")
            web = enclave.host_id("web-server")
            orch.ingest_event(Event(alert=Alert(web, "CPCON3"), cpcon_level=CpconLevel(3)))
            enclave.pump(10)
            orch.execute_directive(fig9_directive, issuer="operator")
            return orch.repository_json()

        assert run() == run()

    def test_monotone_posture_across_verified_records(self, fig8_directive, fig9_directive):
        enclave = build_enclave(baseline=4)
        orch = enclave.orchestrator
        orch.execute_directive(fig8_directive, issuer="operator")
        orch.execute_directive(fig9_directive, issuer="operator")
        verified = [r for r in orch.records if r.status is DirectiveStatus.VERIFIED]
        assert len(verified) == 2
        openness = {"blocked": 0, "open": 1}
        earlier = expected_effects(verified[0].directive, enclave.network.topology, orch.host_id)
        later = expected_effects(verified[1].directive, enclave.network.topology, orch.host_id)
        for key in set(earlier) & set(later):
            assert openness[later[key]] <= openness[earlier[key]]

    def test_event_log_replay_round_trips(self, tmp_path):
        from cpcon.orchestrator.engine import replay_event_log

        enclave = build_enclave(baseline=4)
        orch = enclave.orchestrator
        orch.ingest_event(dns_dos_event())
        enclave.pump(10)
        paths = orch.dump_logs(tmp_path)
        restored = replay_event_log(paths["events"])
        assert [r.to_obj() for r in restored] == [r.to_obj() for r in orch.events]
