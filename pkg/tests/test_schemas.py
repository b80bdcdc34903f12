"""Published schemas stay in lockstep with what the code emits and accepts."""

from __future__ import annotations

import json
from pathlib import Path

import pytest
from jsonschema import Draft202012Validator

from conftest import fixture_json
from cpcon.agents.agent import validate_frame
from cpcon.policy.wire import directive_to_obj, event_to_obj, parse_directive
from cpcon.policy.model import Alert, CpconLevel, Event
from cpcon.runtime import reference_topology_doc

SCHEMA_DIR = Path(__file__).parent.parent / "docs" / "schemas"


def schema(name: str) -> Draft202012Validator:
    doc = json.loads((SCHEMA_DIR / f"{name}.schema.json").read_text())
    Draft202012Validator.check_schema(doc)
    return Draft202012Validator(doc)


class TestDirectiveSchema:
    def test_fixture_directives_validate(self):
        v = schema("directive")
        for name in ("directive_cpcon3.json", "directive_cpcon2.json"):
            v.validate(fixture_json(name))

    def test_serializer_output_validates(self):
        v = schema("directive")
        d = parse_directive(
            {
                "cpcon_level": 2,
                "threat": "web_attacks",
                "actions": [
                    {"verb": "deploy_module", "targets": [45189], "params": {"kind": "isolate"}}
                ],
            }
        )
        v.validate(directive_to_obj(d))

    def test_schema_rejects_bad_level(self):
        v = schema("directive")
        doc = dict(fixture_json("directive_cpcon2.json"), cpcon_level=7)
        assert not v.is_valid(doc)


class TestEventSchema:
    def test_emitted_events_validate(self):
        v = schema("event")
        event = Event(
            alert=Alert(45189, "DNS_DoS", observed_at=1500),
            cpcon_level=CpconLevel(4),
            actions_taken=("rate_limited",),
        )
        v.validate(event_to_obj(event))


class TestTopologySchema:
    def test_reference_testbed_validates(self):
        schema("topology").validate(reference_topology_doc())


class TestFrameSchema:
    def test_agent_frames_validate(self):
        v = schema("frame")
        frame = validate_frame(
            {"type": "event", "src": 45189, "payload": {"anything": True}}
        )
        v.validate(frame)

    def test_frame_validator_rejects_what_schema_rejects(self):
        from cpcon.errors import MalformedJsonError

        bad = {"type": "teleport", "payload": {}}
        assert not schema("frame").is_valid(bad)
        with pytest.raises(MalformedJsonError):
            validate_frame(bad)


class TestMetricsSchema:
    def test_emitted_metrics_validate(self, tmp_path):
        from cpcon.scenario.harness import ScenarioOptions, run_scenario
        from cpcon.scenario.metrics import emit_metrics

        report = run_scenario("dns_dos_only", 42, ScenarioOptions())
        path = emit_metrics(report, "json", tmp_path / "m.json")
        schema("metrics").validate(json.loads(path.read_text()))
