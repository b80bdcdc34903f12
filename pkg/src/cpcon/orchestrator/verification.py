"""Expected-reachability computation and scan comparison.

A directive's actions induce an expected reachability matrix as seen from
the orchestrator. Verification scans the affected (target, port) pairs and
passes only when observation equals expectation, which is what prevents a
misbehaving router from being reported as compliant.
"""

from __future__ import annotations

from typing import Any

from cpcon.netem.network import BLOCKED, OPEN, Network, ReachabilityMatrix
from cpcon.netem.rules import ADMIN_PORT
from cpcon.netem.topology import Topology
from cpcon.policy.model import Directive, SelectorKind, Verb
from cpcon.policy.targets import resolve_targets

WEB_PORTS = frozenset({80, 443})

#: (src, dst, port) -> expected state
ExpectedMatrix = dict[tuple[int, int, int], str]


def _subnet_probe_ports(topo: Topology, subnet: str) -> set[int]:
    ports: set[int] = {ADMIN_PORT}
    for host in topo.hosts_in_subnet(subnet, include_router=True):
        ports |= host.listening_ports
    return ports


def expected_effects(directive: Directive, topo: Topology, observer: int) -> ExpectedMatrix:
    """Expected reachability entries induced by a directive's actions.

    Only reachability-affecting verbs contribute; a directive of pure
    monitoring actions verifies vacuously. Later actions win on overlap.
    """
    expected: ExpectedMatrix = {}
    for action in directive.actions:
        if action.verb is Verb.BLOCK_WEB_TRAFFIC:
            for sel in action.targets:
                if sel.kind is not SelectorKind.SUBNET:
                    continue
                for host in topo.hosts_in_subnet(sel.subnet_name):
                    for port in WEB_PORTS:
                        expected[(observer, host.host_id, port)] = BLOCKED
        elif action.verb is Verb.ISOLATE:
            for sel in action.targets:
                if sel.kind is SelectorKind.SUBNET:
                    ports = _subnet_probe_ports(topo, sel.subnet_name)
                    router = topo.router_for_subnet(sel.subnet_name)
                    for host in topo.hosts_in_subnet(sel.subnet_name):
                        for port in ports:
                            expected[(observer, host.host_id, port)] = BLOCKED
                    for port in ports:
                        # the admin carve-out keeps the router reachable
                        # from the orchestrator on port 22 only
                        state = OPEN if port == ADMIN_PORT else BLOCKED
                        expected[(observer, router.host_id, port)] = state
                else:
                    for host_id in sorted(resolve_targets(sel, topo)):
                        host = topo.host(host_id)
                        for port in sorted(host.listening_ports | {ADMIN_PORT}):
                            expected[(observer, host_id, port)] = BLOCKED
    return expected


def merge_expected(matrices: list[ExpectedMatrix]) -> ExpectedMatrix:
    """Pointwise merge where later (stricter) directives win."""
    merged: ExpectedMatrix = {}
    for m in matrices:
        merged.update(m)
    return merged


def run_verification_scan(
    network: Network, expected: ExpectedMatrix, observer: int
) -> tuple[bool, ReachabilityMatrix, list[dict[str, Any]]]:
    """Scan every expected key and diff observation against expectation."""
    matrix = ReachabilityMatrix()
    targets = sorted({dst for (_, dst, _) in expected})
    ports = sorted({port for (_, _, port) in expected})
    if targets and ports:
        matrix = network.scan(observer, targets, ports)
    mismatches: list[dict[str, Any]] = []
    for key in sorted(expected):
        observed = matrix.entries.get(key, BLOCKED)
        if observed != expected[key]:
            src, dst, port = key
            mismatches.append(
                {
                    "src": src,
                    "dst": dst,
                    "port": port,
                    "expected": expected[key],
                    "observed": observed,
                }
            )
    return not mismatches, matrix, mismatches
