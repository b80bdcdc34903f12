"""Declarative CPCON policy language: directives, events, selectors, levels."""

from cpcon.policy.model import (
    ActionSpec,
    Alert,
    CpconLevel,
    Directive,
    Event,
    LevelOrder,
    SelectorKind,
    TargetSelector,
    ThreatCategory,
    Verb,
    compare_levels,
)
from cpcon.policy.targets import resolve_targets
from cpcon.policy.wire import (
    parse_directive,
    parse_event,
    serialize_directive,
    serialize_event,
)

__all__ = [
    "ActionSpec",
    "Alert",
    "CpconLevel",
    "Directive",
    "Event",
    "LevelOrder",
    "SelectorKind",
    "TargetSelector",
    "ThreatCategory",
    "Verb",
    "compare_levels",
    "parse_directive",
    "parse_event",
    "resolve_targets",
    "serialize_directive",
    "serialize_event",
]
