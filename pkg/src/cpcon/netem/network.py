"""Flow delivery, scanning, and the flow/scan log.

The network is the single owner of world state (rule tables, isolation
flags). Flow outcomes are a pure function of that state, so identical
inputs always produce identical logs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable

from cpcon.errors import UnknownRouterError
from cpcon.netem.clock import VirtualClock
from cpcon.netem.rules import RouterRule, RuleTable
from cpcon.netem.topology import Router, Topology

#: reachability matrix entry states
OPEN = "open"
BLOCKED = "blocked"
HOST_DOWN = "host_down"


@dataclass(frozen=True)
class Flow:
    """One network flow attempt."""

    src_host: int
    dst_host: int
    dst_port: int
    src_port: int = 33000
    protocol: str = "tcp"
    kind: str = "generic"
    issued_at: int = 0

    def __post_init__(self) -> None:
        for port in (self.src_port, self.dst_port):
            if not 1 <= port <= 65535:
                raise ValueError(f"port out of range: {port}")
        if self.protocol not in ("tcp", "udp"):
            raise ValueError(f"bad protocol {self.protocol!r}")


@dataclass(frozen=True)
class FlowOutcome:
    """Result of attempting delivery: delivered, blocked, or refused."""

    status: str  # delivered | blocked | refused
    reason: str | None = None  # router_rule | host_isolated | no_listener
    router: str | None = None
    rule_id: int | None = None
    hops: int = 0

    @property
    def delivered(self) -> bool:
        return self.status == "delivered"


@dataclass
class ReachabilityMatrix:
    """(source, target, port) -> open | blocked | host_down."""

    entries: dict[tuple[int, int, int], str] = field(default_factory=dict)

    def open_entries(self) -> list[tuple[int, int, int]]:
        return sorted(k for k, v in self.entries.items() if v == OPEN)

    def counts(self) -> dict[str, int]:
        out = {OPEN: 0, BLOCKED: 0, HOST_DOWN: 0}
        for v in self.entries.values():
            out[v] += 1
        return out

    def merge(self, other: "ReachabilityMatrix") -> None:
        self.entries.update(other.entries)

    def to_records(self) -> list[dict]:
        return [
            {"src": k[0], "dst": k[1], "port": k[2], "state": v}
            for k, v in sorted(self.entries.items())
        ]


class Network:
    """The emulated network: topology plus mutable enforcement state."""

    def __init__(self, topology: Topology, clock: VirtualClock, hop_latency_ms: int = 1):
        self.topology = topology
        self.clock = clock
        self.hop_latency_ms = hop_latency_ms
        self.tables: dict[str, RuleTable] = {
            name: RuleTable(router_name=name) for name in topology.routers
        }
        self.flow_log: list[dict] = []
        # routers that silently discard new rules (fault injection)
        self._dropping_rules: set[str] = set()

    # --- enforcement state -------------------------------------------------

    def apply_rule(self, router_name: str, rule: RouterRule) -> int:
        """Append a rule to a router's table; returns the new table version."""
        if router_name not in self.tables:
            raise UnknownRouterError(f"no router named {router_name!r}")
        table = self.tables[router_name]
        if router_name in self._dropping_rules:
            # the router acknowledges but never installs; verification
            # scans are what catches this
            return table.bump_version()
        return table.append(rule)

    def set_isolated(self, host_id: int, isolated: bool) -> None:
        self.topology.host(host_id).isolated = isolated

    def set_rule_dropping(self, router_name: str, dropping: bool) -> None:
        if router_name not in self.tables:
            raise UnknownRouterError(f"no router named {router_name!r}")
        if dropping:
            self._dropping_rules.add(router_name)
        else:
            self._dropping_rules.discard(router_name)

    # --- delivery ------------------------------------------------------------

    def _routers_on_path(self, src_subnet: str, dst_subnet: str) -> list[Router]:
        if src_subnet == dst_subnet:
            return []
        first = self.topology.router_for_subnet(src_subnet)
        second = self.topology.router_for_subnet(dst_subnet)
        return [first] if first.name == second.name else [first, second]

    def _route(self, src_host: int, dst_host: int, dst_port: int, protocol: str) -> FlowOutcome:
        """Pure routing decision; shared by send_flow and scan probes."""
        src = self.topology.host(src_host)
        dst = self.topology.host(dst_host)
        if src.isolated or dst.isolated:
            return FlowOutcome(status="blocked", reason="host_isolated")
        if src_host == dst_host:
            if dst_port in dst.listening_ports:
                return FlowOutcome(status="delivered", hops=0)
            return FlowOutcome(status="refused", reason="no_listener")
        routers = self._routers_on_path(src.subnet, dst.subnet)
        for router in routers:
            hit = self.tables[router.name].evaluate(
                src_host=src_host,
                dst_host=dst_host,
                dst_port=dst_port,
                protocol=protocol,
                src_subnet=src.subnet,
                dst_subnet=dst.subnet,
                router_host_id=router.host_id,
            )
            if hit is not None and hit.verdict.value == "block":
                return FlowOutcome(
                    status="blocked",
                    reason="router_rule",
                    router=router.name,
                    rule_id=hit.rule_id,
                )
        if dst_port not in dst.listening_ports:
            return FlowOutcome(status="refused", reason="no_listener", hops=len(routers) + 1)
        return FlowOutcome(status="delivered", hops=len(routers) + 1)

    def send_flow(self, flow: Flow) -> FlowOutcome:
        """Deliver one flow and log the outcome."""
        outcome = self._route(flow.src_host, flow.dst_host, flow.dst_port, flow.protocol)
        self.log_flow(
            flow,
            outcome.status,
            outcome.reason,
            outcome.router,
            outcome.rule_id,
            latency_ms=outcome.hops * self.hop_latency_ms if outcome.delivered else None,
        )
        return outcome

    def log_flow(
        self,
        flow: Flow,
        outcome: str,
        reason: str | None = None,
        router: str | None = None,
        rule_id: int | None = None,
        latency_ms: int | None = None,
    ) -> None:
        self.flow_log.append(
            {
                "type": "flow",
                "ts": self.clock.now_ms,
                "src": flow.src_host,
                "dst": flow.dst_host,
                "src_port": flow.src_port,
                "dst_port": flow.dst_port,
                "protocol": flow.protocol,
                "kind": flow.kind,
                "outcome": outcome,
                "reason": reason,
                "router": router,
                "rule_id": rule_id,
                "latency_ms": latency_ms,
            }
        )

    # --- scanning ------------------------------------------------------------

    def scan(
        self, source: int, targets: Iterable[int], ports: Iterable[int]
    ) -> ReachabilityMatrix:
        """Probe the targets x ports cross-product from one source.

        An entry is open iff a probe flow would be delivered and the target
        listens on that port. Scanning mutates nothing but the scan log.
        """
        self.topology.host(source)
        matrix = ReachabilityMatrix()
        target_list = sorted(set(targets))
        port_list = sorted(set(ports))
        for dst in target_list:
            for port in port_list:
                if not self.topology.has_host(dst):
                    matrix.entries[(source, dst, port)] = HOST_DOWN
                    continue
                outcome = self._route(source, dst, port, "tcp")
                matrix.entries[(source, dst, port)] = (
                    OPEN if outcome.delivered else BLOCKED
                )
        counts = matrix.counts()
        self.flow_log.append(
            {
                "type": "scan",
                "ts": self.clock.now_ms,
                "source": source,
                "targets": target_list,
                "ports": port_list,
                "open": counts[OPEN],
                "blocked": counts[BLOCKED],
                "host_down": counts[HOST_DOWN],
            }
        )
        return matrix

    # --- observability ---------------------------------------------------------

    def flow_log_lines(self) -> list[str]:
        """The flow/scan log as newline-delimited JSON records."""
        return [json.dumps(rec, sort_keys=True) for rec in self.flow_log]
