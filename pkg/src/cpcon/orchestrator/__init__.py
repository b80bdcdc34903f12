"""Correlation engine, policy repository, and enforcement verification."""

from cpcon.orchestrator.engine import Orchestrator, OrchestratorConfig
from cpcon.orchestrator.records import (
    DirectiveRecord,
    DirectiveStatus,
    EventRecord,
    Recommendation,
    RecommendationState,
)
from cpcon.orchestrator.policyrules import (
    EscalationRule,
    PolicyRules,
    ResponseRule,
    load_policy_rules,
)

__all__ = [
    "DirectiveRecord",
    "DirectiveStatus",
    "EscalationRule",
    "EventRecord",
    "Orchestrator",
    "OrchestratorConfig",
    "PolicyRules",
    "Recommendation",
    "RecommendationState",
    "ResponseRule",
    "load_policy_rules",
]
