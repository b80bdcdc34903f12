"""Deterministic virtual network: topology, firewall rules, flows, clock."""

from cpcon.netem.clock import VirtualClock
from cpcon.netem.network import Flow, FlowOutcome, Network, ReachabilityMatrix
from cpcon.netem.rules import Direction, RouterRule, RuleMatch, Verdict
from cpcon.netem.topology import (
    IdAllocator,
    Router,
    Subnet,
    Topology,
    VirtualHost,
    load_topology,
)

__all__ = [
    "Direction",
    "Flow",
    "FlowOutcome",
    "IdAllocator",
    "Network",
    "ReachabilityMatrix",
    "Router",
    "RouterRule",
    "RuleMatch",
    "Subnet",
    "Topology",
    "Verdict",
    "VirtualClock",
    "VirtualHost",
    "load_topology",
]
