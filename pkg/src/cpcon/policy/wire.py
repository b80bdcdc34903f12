"""Canonical JSON wire forms for directives and events.

Canonical documents use lowercase snake_case keys and lowercase verbs;
parsing is case-insensitive on keys and verbs so operator-authored variants
(``CPCON_level``, ``Block_web_traffic``) are accepted. Serialization is
byte-stable: sorted keys, two-space indent, trailing newline.
"""

from __future__ import annotations

import json
from typing import Any, Mapping

from cpcon.errors import (
    EmptyActionListError,
    LevelOutOfRangeError,
    MalformedJsonError,
    MissingAlertError,
)
from cpcon.policy.model import (
    ActionSpec,
    Alert,
    CpconLevel,
    Directive,
    Event,
    TargetSelector,
    ThreatCategory,
    Verb,
)


def _as_mapping(doc: str | bytes | Mapping[str, Any]) -> Mapping[str, Any]:
    if isinstance(doc, Mapping):
        return doc
    try:
        loaded = json.loads(doc)
    except (json.JSONDecodeError, TypeError, ValueError) as exc:
        raise MalformedJsonError(f"not valid JSON: {exc}") from exc
    if not isinstance(loaded, dict):
        raise MalformedJsonError("top-level JSON value must be an object")
    return loaded


def _lookup(doc: Mapping[str, Any], *names: str) -> Any:
    """Case-insensitive key lookup accepting any of the given aliases."""
    wanted = {n.lower() for n in names}
    for key, value in doc.items():
        if isinstance(key, str) and key.lower() in wanted:
            return value
    return None


def _parse_level(raw: Any) -> CpconLevel:
    if raw is None:
        raise MalformedJsonError("missing cpcon_level")
    if isinstance(raw, bool) or not isinstance(raw, int):
        raise LevelOutOfRangeError(f"cpcon_level must be an integer, got {raw!r}")
    return CpconLevel(raw)


def parse_directive(doc: str | bytes | Mapping[str, Any]) -> Directive:
    """Parse a directive document into a validated :class:`Directive`."""
    data = _as_mapping(doc)
    level = _parse_level(_lookup(data, "cpcon_level"))
    threat_raw = _lookup(data, "threat")
    if threat_raw is None:
        raise MalformedJsonError("missing threat")
    threat = ThreatCategory(str(threat_raw))

    actions_raw = _lookup(data, "actions", "action")
    if actions_raw is None:
        raise MalformedJsonError("missing actions")
    if not isinstance(actions_raw, list):
        raise MalformedJsonError("actions must be an array")
    if not actions_raw:
        raise EmptyActionListError("directive actions array is empty")

    actions = []
    for entry in actions_raw:
        if not isinstance(entry, Mapping):
            raise MalformedJsonError(f"action entry must be an object, got {entry!r}")
        verb = Verb.parse(_lookup(entry, "verb"))
        targets_raw = _lookup(entry, "targets", "target")
        if targets_raw is None:
            raise MalformedJsonError(f"action {verb.value} is missing targets")
        if not isinstance(targets_raw, list):
            targets_raw = [targets_raw]
        targets = tuple(TargetSelector.parse(t) for t in targets_raw)
        params_raw = _lookup(entry, "params") or {}
        if not isinstance(params_raw, Mapping):
            raise MalformedJsonError("action params must be an object")
        actions.append(ActionSpec(verb=verb, targets=targets, params=dict(params_raw)))

    return Directive(cpcon_level=level, threat=threat, actions=tuple(actions))


def directive_to_obj(d: Directive) -> dict[str, Any]:
    """Plain-dict form of a directive, canonical key spelling."""
    actions = []
    for action in d.actions:
        entry: dict[str, Any] = {
            "verb": action.verb.value,
            "targets": [sel.token() for sel in action.targets],
        }
        if action.params:
            entry["params"] = dict(action.params)
        actions.append(entry)
    return {
        "cpcon_level": d.cpcon_level.value,
        "threat": d.threat.name,
        "actions": actions,
    }


def canonical_json(obj: Any) -> str:
    """Byte-stable rendering used for fixture files and hashing."""
    return json.dumps(obj, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def serialize_directive(d: Directive) -> str:
    """Render a directive in its canonical byte-stable form."""
    return canonical_json(directive_to_obj(d))


def parse_event(doc: str | bytes | Mapping[str, Any]) -> Event:
    """Parse an event document into a validated :class:`Event`."""
    data = _as_mapping(doc)
    alert_raw = _lookup(data, "alert")
    if alert_raw is None:
        raise MissingAlertError("event document is missing its alert")

    if isinstance(alert_raw, Mapping):
        host_raw = _lookup(alert_raw, "host_id")
        type_raw = _lookup(alert_raw, "event_type")
        observed = _lookup(alert_raw, "observed_at")
    elif isinstance(alert_raw, list) and len(alert_raw) == 2:
        host_raw, type_raw = alert_raw
        observed = None
    else:
        raise MalformedJsonError(f"alert must be an object, got {alert_raw!r}")
    if host_raw is None or type_raw is None:
        raise MalformedJsonError("alert requires host_id and event_type")
    alert = Alert(
        host_id=host_raw,
        event_type=str(type_raw),
        observed_at=observed if observed is not None else 0,
    )

    level = _parse_level(_lookup(data, "cpcon_level"))
    actions_raw = _lookup(data, "actions_taken", "actions", "action")
    if actions_raw is None:
        actions_raw = []
    if not isinstance(actions_raw, list):
        raise MalformedJsonError("actions_taken must be an array")
    return Event(alert=alert, cpcon_level=level, actions_taken=tuple(str(a) for a in actions_raw))


def event_to_obj(e: Event) -> dict[str, Any]:
    return {
        "alert": {
            "host_id": e.alert.host_id,
            "event_type": e.alert.event_type,
            "observed_at": e.alert.observed_at,
        },
        "cpcon_level": e.cpcon_level.value,
        "actions_taken": list(e.actions_taken),
    }


def serialize_event(e: Event) -> str:
    """Render an event in its canonical byte-stable form."""
    return canonical_json(event_to_obj(e))
