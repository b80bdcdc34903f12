"""Declarative response/escalation rules and directive templates.

The rule table is data, not code: operators extend behavior by editing the
JSON document, which maps host event types to module deployments and to
escalation proposals. Directive templates bind an approved recommendation
to the exact directive it executes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any, Mapping

from cpcon.errors import SchemaViolationError
from cpcon.policy.model import Directive
from cpcon.policy.wire import parse_directive


@dataclass(frozen=True)
class ResponseRule:
    """event type -> module deployment on the alerting host."""

    event_type: str
    deploy_kind: str
    deploy_params: Mapping[str, Any] = field(default_factory=dict)
    skip_if_active: bool = True


@dataclass(frozen=True)
class EscalationRule:
    """(current level, event type) -> proposed stricter posture."""

    event_type: str
    current_level_gte: int
    proposed_level: int
    threat: str


@dataclass
class PolicyRules:
    responses: list[ResponseRule]
    escalations: list[EscalationRule]
    templates: dict[tuple[int, str], Directive]

    def response_for(self, event_type: str) -> ResponseRule | None:
        for rule in self.responses:
            if rule.event_type == event_type:
                return rule
        return None

    def escalation_for(self, event_type: str, current_level: int) -> EscalationRule | None:
        for rule in self.escalations:
            if rule.event_type == event_type and current_level >= rule.current_level_gte:
                return rule
        return None

    def template(self, level: int, threat: str) -> Directive | None:
        return self.templates.get((level, threat))


def _fixture_text(name: str) -> str:
    return resources.files("cpcon.fixtures").joinpath(name).read_text()


def load_policy_rules(source: str | Path | Mapping[str, Any] | None = None) -> PolicyRules:
    """Load the rule document; defaults to the packaged fixture."""
    if source is None:
        doc = json.loads(_fixture_text("policy_rules.json"))
        template_loader = _fixture_text
    elif isinstance(source, Mapping):
        doc = source
        template_loader = _fixture_text
    else:
        path = Path(source)
        doc = json.loads(path.read_text())
        template_loader = lambda name: (path.parent / name).read_text()  # noqa: E731

    if not isinstance(doc, Mapping):
        raise SchemaViolationError("policy rules document must be an object")

    responses = []
    for entry in doc.get("responses", []):
        deploy = entry.get("deploy", {})
        if "event_type" not in entry or "kind" not in deploy:
            raise SchemaViolationError(f"bad response rule: {entry!r}")
        responses.append(
            ResponseRule(
                event_type=entry["event_type"],
                deploy_kind=deploy["kind"],
                deploy_params=dict(deploy.get("params", {})),
                skip_if_active=bool(entry.get("skip_if_active", True)),
            )
        )

    escalations = []
    for entry in doc.get("escalations", []):
        try:
            escalations.append(
                EscalationRule(
                    event_type=entry["event_type"],
                    current_level_gte=int(entry["current_level_gte"]),
                    proposed_level=int(entry["proposed_level"]),
                    threat=entry["threat"],
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise SchemaViolationError(f"bad escalation rule: {entry!r}") from exc

    templates: dict[tuple[int, str], Directive] = {}
    for entry in doc.get("templates", []):
        if "cpcon_level" not in entry or "threat" not in entry or "file" not in entry:
            raise SchemaViolationError(f"bad template entry: {entry!r}")
        directive = parse_directive(template_loader(entry["file"]))
        templates[(int(entry["cpcon_level"]), entry["threat"])] = directive

    return PolicyRules(responses=responses, escalations=escalations, templates=templates)
