"""Policy repository record types: directives, events, recommendations."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any

from cpcon.policy.model import CpconLevel, Directive, Event, ThreatCategory
from cpcon.policy.wire import directive_to_obj, event_to_obj


class DirectiveStatus(enum.Enum):
    RECEIVED = "received"
    EXECUTING = "executing"
    IMPLEMENTED = "implemented"
    VERIFIED = "verified"
    FAILED = "failed"


#: legal forward transitions; anything else is a programming error
_STATUS_ORDER = {
    DirectiveStatus.RECEIVED: (DirectiveStatus.EXECUTING,),
    DirectiveStatus.EXECUTING: (DirectiveStatus.IMPLEMENTED, DirectiveStatus.FAILED),
    DirectiveStatus.IMPLEMENTED: (DirectiveStatus.VERIFIED, DirectiveStatus.FAILED),
    DirectiveStatus.VERIFIED: (),
    DirectiveStatus.FAILED: (),
}


@dataclass
class ActionOutcome:
    action: str
    status: str = "pending"  # pending | ok | failed
    detail: str | None = None

    def to_obj(self) -> dict[str, Any]:
        return {"action": self.action, "status": self.status, "detail": self.detail}


@dataclass
class DirectiveRecord:
    """One directive's journey: received -> executing -> implemented -> verified|failed."""

    directive_id: int
    directive: Directive
    issuer: str  # operator | system
    status: DirectiveStatus = DirectiveStatus.RECEIVED
    per_action: list[ActionOutcome] = field(default_factory=list)
    timestamps: dict[str, int] = field(default_factory=dict)
    verification: dict[str, Any] | None = None

    def transition(self, status: DirectiveStatus, ts_ms: int) -> None:
        if status not in _STATUS_ORDER[self.status]:
            raise ValueError(f"illegal transition {self.status.value} -> {status.value}")
        self.status = status
        self.timestamps[status.value] = ts_ms

    @property
    def terminal(self) -> bool:
        return self.status in (DirectiveStatus.VERIFIED, DirectiveStatus.FAILED)

    def to_obj(self) -> dict[str, Any]:
        return {
            "directive_id": self.directive_id,
            "directive": directive_to_obj(self.directive),
            "issuer": self.issuer,
            "status": self.status.value,
            "per_action": [a.to_obj() for a in self.per_action],
            "timestamps": dict(self.timestamps),
            "verification": self.verification,
        }

    def summary(self) -> dict[str, Any]:
        return {
            "directive_id": self.directive_id,
            "cpcon_level": self.directive.cpcon_level.value,
            "threat": self.directive.threat.name,
            "issuer": self.issuer,
            "status": self.status.value,
            "actions": [
                {"action": a.action, "status": a.status, "detail": a.detail}
                for a in self.per_action
            ],
            "verification": self.verification,
        }


@dataclass
class EventRecord:
    """Append-only event database row."""

    event_id: int
    event: Event
    received_at: int
    seq: int
    correlation_tags: list[str] = field(default_factory=list)
    quarantined: bool = False

    def to_obj(self) -> dict[str, Any]:
        return {
            "event_id": self.event_id,
            "event": event_to_obj(self.event),
            "received_at": self.received_at,
            "seq": self.seq,
            "correlation_tags": list(self.correlation_tags),
            "quarantined": self.quarantined,
        }


class RecommendationState(enum.Enum):
    PENDING = "pending"
    APPROVED = "approved"
    DISMISSED = "dismissed"


@dataclass
class Recommendation:
    """A proposed escalation awaiting the operator."""

    rec_id: int
    proposed_level: CpconLevel
    threat: ThreatCategory
    triggering_events: list[int]
    state: RecommendationState = RecommendationState.PENDING
    created_at: int = 0
    directive_id: int | None = None  # set on approval

    def to_obj(self) -> dict[str, Any]:
        return {
            "rec_id": self.rec_id,
            "proposed_level": self.proposed_level.value,
            "threat": self.threat.name,
            "triggering_events": list(self.triggering_events),
            "state": self.state.value,
            "created_at": self.created_at,
            "directive_id": self.directive_id,
        }
