"""Ordered firewall rule tables with first-match semantics.

Each router owns one table. Rules are evaluated in ascending rule id; the
first matching rule decides the verdict; the default verdict is allow.
A rule may carry a source exception admitting one host to the router's
admin port (22), which is how subnet isolation keeps a recovery path open.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from cpcon.errors import DuplicateRuleIdError

ADMIN_PORT = 22


class Direction(enum.Enum):
    INBOUND = "inbound"
    OUTBOUND = "outbound"
    BOTH = "both"


class Verdict(enum.Enum):
    ALLOW = "allow"
    BLOCK = "block"


@dataclass(frozen=True)
class RuleMatch:
    """Traffic pattern a rule applies to.

    ``subnet`` names whose traffic is filtered; ``ports`` of None means all
    destination ports; ``protocol`` of None means both tcp and udp.
    """

    subnet: str
    direction: Direction = Direction.BOTH
    ports: frozenset[int] | None = None
    protocol: str | None = None

    def __post_init__(self) -> None:
        if self.ports is not None:
            object.__setattr__(self, "ports", frozenset(self.ports))
        if self.protocol is not None and self.protocol not in ("tcp", "udp"):
            raise ValueError(f"bad protocol {self.protocol!r}")


@dataclass(frozen=True)
class RouterRule:
    rule_id: int
    match: RuleMatch
    verdict: Verdict
    source_exception: int | None = None

    def to_obj(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "subnet": self.match.subnet,
            "direction": self.match.direction.value,
            "ports": sorted(self.match.ports) if self.match.ports is not None else None,
            "protocol": self.match.protocol,
            "verdict": self.verdict.value,
            "source_exception": self.source_exception,
        }


def rule_matches(
    rule: RouterRule,
    *,
    src_host: int,
    dst_host: int,
    dst_port: int,
    protocol: str,
    src_subnet: str,
    dst_subnet: str,
    router_host_id: int,
) -> bool:
    """Decide whether a rule applies to a flow crossing this router."""
    m = rule.match
    if m.direction is Direction.OUTBOUND:
        if src_subnet != m.subnet:
            return False
    elif m.direction is Direction.INBOUND:
        if dst_subnet != m.subnet:
            return False
    else:
        if m.subnet not in (src_subnet, dst_subnet):
            return False
    if m.ports is not None and dst_port not in m.ports:
        return False
    if m.protocol is not None and protocol != m.protocol:
        return False
    if (
        rule.source_exception is not None
        and src_host == rule.source_exception
        and dst_host == router_host_id
        and dst_port == ADMIN_PORT
    ):
        # admin carve-out: the excepted source may still reach the router
        return False
    return True


@dataclass
class RuleTable:
    """One router's ordered ruleset plus its monotone version counter."""

    router_name: str
    rules: list[RouterRule] = field(default_factory=list)
    version: int = 0

    def append(self, rule: RouterRule) -> int:
        if any(r.rule_id == rule.rule_id for r in self.rules):
            raise DuplicateRuleIdError(
                f"rule id {rule.rule_id} already installed on {self.router_name}"
            )
        self.rules.append(rule)
        self.rules.sort(key=lambda r: r.rule_id)
        self.version += 1
        return self.version

    def bump_version(self) -> int:
        """Version increment without installing anything (fault injection)."""
        self.version += 1
        return self.version

    def evaluate(
        self,
        *,
        src_host: int,
        dst_host: int,
        dst_port: int,
        protocol: str,
        src_subnet: str,
        dst_subnet: str,
        router_host_id: int,
    ) -> RouterRule | None:
        """First matching rule in ascending rule id order, or None."""
        for rule in self.rules:
            if rule_matches(
                rule,
                src_host=src_host,
                dst_host=dst_host,
                dst_port=dst_port,
                protocol=protocol,
                src_subnet=src_subnet,
                dst_subnet=dst_subnet,
                router_host_id=router_host_id,
            ):
                return rule
        return None
