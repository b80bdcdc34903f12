"""Value types for the CPCON policy language.

Everything here is immutable and safe to share across threads. Wire-format
parsing/serialization lives in :mod:`cpcon.policy.wire`.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Any, Mapping

from cpcon.errors import (
    DuplicateActionError,
    EmptyActionListError,
    LevelOutOfRangeError,
    MalformedJsonError,
    UnknownVerbError,
)

#: Threat categories with first-class meaning; other tokens are accepted
#: but reported as nonstandard.
STANDARD_THREATS = frozenset({"web_applications", "web_attacks", "phishing"})


@dataclass(frozen=True, order=True)
class CpconLevel:
    """A protection posture level. 1 is most restrictive, 5 least."""

    value: int

    def __post_init__(self) -> None:
        if not isinstance(self.value, int) or isinstance(self.value, bool):
            raise LevelOutOfRangeError(f"cpcon_level must be an integer, got {self.value!r}")
        if not 1 <= self.value <= 5:
            raise LevelOutOfRangeError(f"cpcon_level must be in 1..5, got {self.value}")

    def is_more_restrictive_than(self, other: "CpconLevel") -> bool:
        return self.value < other.value

    def __int__(self) -> int:
        return self.value

    def __str__(self) -> str:
        return str(self.value)


class LevelOrder(enum.Enum):
    """Result of comparing two posture levels by restrictiveness."""

    MORE_RESTRICTIVE = "more_restrictive"
    EQUAL = "equal"
    LESS_RESTRICTIVE = "less_restrictive"


def compare_levels(a: CpconLevel, b: CpconLevel) -> LevelOrder:
    """Order ``a`` relative to ``b``: lower numeric value is more restrictive."""
    if a.value < b.value:
        return LevelOrder.MORE_RESTRICTIVE
    if a.value > b.value:
        return LevelOrder.LESS_RESTRICTIVE
    return LevelOrder.EQUAL


@dataclass(frozen=True)
class ThreatCategory:
    """Amplifying threat context carried by a directive."""

    name: str

    def __post_init__(self) -> None:
        if not isinstance(self.name, str) or not self.name.strip():
            raise MalformedJsonError("threat must be a non-empty string")
        object.__setattr__(self, "name", self.name.strip().lower())

    @property
    def is_standard(self) -> bool:
        return self.name in STANDARD_THREATS

    def __str__(self) -> str:
        return self.name


class SelectorKind(enum.Enum):
    ALL_HOSTS = "all_hosts"
    ALL_SERVERS = "all_servers"
    SUBNET = "subnet"
    HOST = "host"


@dataclass(frozen=True)
class TargetSelector:
    """Names the hosts an action applies to.

    Token grammar: ``all_hosts`` | ``all_servers`` | ``subnet:<name>`` |
    ``host:<int>``. Bare subnet names (``subnet2``) and bare integers are
    accepted on parse and normalized.
    """

    kind: SelectorKind
    subnet_name: str | None = None
    host_id: int | None = None

    def __post_init__(self) -> None:
        if self.kind is SelectorKind.SUBNET:
            if not self.subnet_name:
                raise MalformedJsonError("subnet selector requires a subnet name")
        elif self.kind is SelectorKind.HOST:
            if not isinstance(self.host_id, int) or isinstance(self.host_id, bool):
                raise MalformedJsonError("host selector requires an integer host id")
        elif self.subnet_name is not None or self.host_id is not None:
            raise MalformedJsonError(f"{self.kind.value} selector takes no argument")

    @classmethod
    def parse(cls, token: object) -> "TargetSelector":
        """Parse a selector token, normalizing paper-style aliases."""
        if isinstance(token, int) and not isinstance(token, bool):
            return cls(SelectorKind.HOST, host_id=token)
        if not isinstance(token, str) or not token.strip():
            raise MalformedJsonError(f"bad target selector: {token!r}")
        text = token.strip().lower()
        if text == "all_hosts":
            return cls(SelectorKind.ALL_HOSTS)
        if text == "all_servers":
            return cls(SelectorKind.ALL_SERVERS)
        if text.startswith("subnet:"):
            return cls(SelectorKind.SUBNET, subnet_name=text.split(":", 1)[1])
        if text.startswith("host:"):
            raw = text.split(":", 1)[1]
            if not raw.lstrip("-").isdigit():
                raise MalformedJsonError(f"host selector needs an integer id: {token!r}")
            return cls(SelectorKind.HOST, host_id=int(raw))
        if text.isdigit():
            return cls(SelectorKind.HOST, host_id=int(text))
        # bare name, e.g. "subnet2": treat as a subnet alias
        return cls(SelectorKind.SUBNET, subnet_name=text)

    def token(self) -> str:
        """Canonical string form."""
        if self.kind is SelectorKind.SUBNET:
            return f"subnet:{self.subnet_name}"
        if self.kind is SelectorKind.HOST:
            return f"host:{self.host_id}"
        return self.kind.value

    def __str__(self) -> str:
        return self.token()


class Verb(enum.Enum):
    """Closed action vocabulary; new behaviors ride deploy_module params."""

    BLOCK_WEB_TRAFFIC = "block_web_traffic"
    SERVER_MONITOR = "server_monitor"
    BUILD_ISOLATE_MOD = "build_isolate_mod"
    ISOLATE = "isolate"
    DEPLOY_MODULE = "deploy_module"

    @classmethod
    def parse(cls, token: object) -> "Verb":
        if not isinstance(token, str):
            raise UnknownVerbError(f"verb must be a string, got {token!r}")
        normalized = token.strip().lower()
        for verb in cls:
            if verb.value == normalized:
                return verb
        raise UnknownVerbError(f"unknown verb {token!r}")


@dataclass(frozen=True)
class ActionSpec:
    """One action within a directive: verb, targets, optional parameters."""

    verb: Verb
    targets: tuple[TargetSelector, ...]
    params: Mapping[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if not self.targets:
            raise MalformedJsonError(f"action {self.verb.value} has no targets")
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "params", dict(self.params))


@dataclass(frozen=True)
class Directive:
    """An ordered posture change: target level, threat, action list."""

    cpcon_level: CpconLevel
    threat: ThreatCategory
    actions: tuple[ActionSpec, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
        if not self.actions:
            raise EmptyActionListError("directive carries no actions")
        seen: set[tuple[str, str]] = set()
        for action in self.actions:
            for sel in action.targets:
                pair = (action.verb.value, sel.token())
                if pair in seen:
                    raise DuplicateActionError(f"duplicate action pair {pair}")
                seen.add(pair)


@dataclass(frozen=True)
class Alert:
    """A host-local observation forwarded to the orchestrator."""

    host_id: int
    event_type: str
    observed_at: int = 0

    def __post_init__(self) -> None:
        if not isinstance(self.host_id, int) or isinstance(self.host_id, bool):
            raise MalformedJsonError(f"alert host_id must be an integer, got {self.host_id!r}")
        if not isinstance(self.event_type, str) or not self.event_type.strip():
            raise MalformedJsonError("alert event_type must be a non-empty string")
        # event_type tokens are preserved verbatim (DNS_DoS, CPCON3, ...)
        object.__setattr__(self, "event_type", self.event_type.strip())
        if not isinstance(self.observed_at, int) or self.observed_at < 0:
            raise MalformedJsonError("alert observed_at must be a non-negative integer")


@dataclass(frozen=True)
class Event:
    """A host alert plus local context and any actions already taken."""

    alert: Alert
    cpcon_level: CpconLevel
    actions_taken: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions_taken", tuple(str(a) for a in self.actions_taken))
