"""Fault injection: the adversarial inputs verification must survive."""

from __future__ import annotations

from dataclasses import dataclass

from cpcon.errors import ScenarioError, UnknownHostError, UnknownTargetError
from cpcon.runtime import Enclave

FAULT_KINDS = ("drop_router_rule", "agent_crash", "delayed_ack")

DEFAULT_ACK_DELAY_MS = 500


@dataclass(frozen=True)
class FaultHandle:
    kind: str
    target: str
    applied_at_ms: int


def parse_fault_spec(spec: str) -> tuple[str, str]:
    """Parse a ``kind:target`` fault spec string."""
    if ":" not in spec:
        raise ScenarioError(f"fault spec must be kind:target, got {spec!r}")
    kind, target = spec.split(":", 1)
    if kind not in FAULT_KINDS:
        raise ScenarioError(f"unknown fault kind {kind!r} (expected one of {FAULT_KINDS})")
    if not target:
        raise ScenarioError("fault spec has an empty target")
    return kind, target


def apply_fault(enclave: Enclave, kind: str, target: str) -> FaultHandle:
    """Activate one fault against a live enclave."""
    topo = enclave.network.topology
    if kind == "drop_router_rule":
        if target in topo.routers:
            router_name = target
        elif target in topo.subnets:
            router_name = topo.router_for_subnet(target).name
        else:
            raise UnknownTargetError(f"no router or subnet named {target!r}")
        enclave.network.set_rule_dropping(router_name, True)
    elif kind == "agent_crash":
        agent = _agent_for(enclave, target)
        agent.crashed = True
    elif kind == "delayed_ack":
        agent = _agent_for(enclave, target)
        enclave.channel.set_extra_delay(agent.host_id, DEFAULT_ACK_DELAY_MS)
    else:
        raise ScenarioError(f"unknown fault kind {kind!r}")
    return FaultHandle(kind=kind, target=target, applied_at_ms=enclave.clock.now_ms)


def _agent_for(enclave: Enclave, target: str):
    topo = enclave.network.topology
    if target.isdigit() and int(target) in enclave.agents:
        return enclave.agents[int(target)]
    try:
        host = topo.host_by_name(target)
    except UnknownHostError as exc:
        raise UnknownTargetError(str(exc)) from exc
    agent = enclave.agents.get(host.host_id)
    if agent is None:
        raise UnknownTargetError(f"host {target!r} has no agent")
    return agent
