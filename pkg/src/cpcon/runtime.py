"""Composition root: one emulated enclave of network, agents, orchestrator.

The enclave owns the virtual clock and serializes every mutation through
it. Attack generators submit flows here; each flow runs the source agent's
observe/enforce pipeline before touching the network, mirroring in-host
enforcement sitting below the routing layer.
"""

from __future__ import annotations

import hashlib
import json
import threading
from importlib import resources
from typing import Any, Mapping

from cpcon.agents.agent import ControlChannel, HostAgent
from cpcon.agents.modules import ALLOW
from cpcon.netem.clock import VirtualClock
from cpcon.netem.network import Flow, FlowOutcome, Network
from cpcon.netem.topology import Topology, load_topology
from cpcon.orchestrator.engine import Orchestrator, OrchestratorConfig


def reference_topology_doc() -> dict[str, Any]:
    """The packaged multi-subnet reference testbed document."""
    text = resources.files("cpcon.fixtures").joinpath("testbed.json").read_text()
    return json.loads(text)


class Enclave:
    """A fully wired emulation: clock, network, agents, orchestrator."""

    def __init__(
        self,
        topology: Topology,
        config: OrchestratorConfig | None = None,
        channel_latency_ms: int = 1,
    ):
        self.clock = VirtualClock()
        self.network = Network(topology, self.clock)
        self.channel = ControlChannel(self.clock, latency_ms=channel_latency_ms)
        self.orchestrator = Orchestrator(self.network, self.channel, config)
        self.agents: dict[int, HostAgent] = {}
        # API handlers and the pump loop share this lock
        self.lock = threading.RLock()

    @classmethod
    def build(
        cls,
        topology_doc: Mapping[str, Any] | str | bytes | None = None,
        *,
        id_seed: int | None = None,
        baseline_level: int = 5,
        config: OrchestratorConfig | None = None,
        register: bool = True,
    ) -> "Enclave":
        """Build an enclave from a topology document (default: reference testbed).

        Registers an agent on every managed host and settles registration
        traffic so the enclave is ready for scenario input.
        """
        if topology_doc is None:
            topology_doc = reference_topology_doc()
        topology = load_topology(topology_doc, id_seed=id_seed)
        if config is None:
            config = OrchestratorConfig(baseline_level=baseline_level)
        enclave = cls(topology, config)
        if register:
            enclave.register_agents()
        return enclave

    def register_agents(self) -> None:
        for host in self.network.topology.managed_hosts():
            agent = HostAgent(self.network, host.name, self.channel)
            self.agents[host.host_id] = agent
            agent.register()
        # let register/ack/level frames land before anything else happens
        self.clock.advance(self.channel.latency_ms * 2 + 1)

    # --- convenience lookups ----------------------------------------------

    def agent_by_name(self, host_name: str) -> HostAgent:
        host = self.network.topology.host_by_name(host_name)
        return self.agents[host.host_id]

    def host_id(self, host_name: str) -> int:
        return self.network.topology.host_by_name(host_name).host_id

    # --- data plane -----------------------------------------------------------

    def submit_flow(self, flow: Flow) -> FlowOutcome:
        """Run one flow through local enforcement, then the network."""
        agent = self.agents.get(flow.src_host)
        if agent is not None:
            decision, by = agent.process_flow(flow)
            if decision != ALLOW:
                outcome = FlowOutcome(status=decision, reason=f"module:{by}")
                self.network.log_flow(flow, decision, reason=f"module:{by}")
                return outcome
        return self.network.send_flow(flow)

    # --- time ---------------------------------------------------------------------

    def pump(self, dt_ms: int) -> int:
        """Advance virtual time under the enclave lock."""
        with self.lock:
            return self.clock.advance(dt_ms)

    def settle(self, budget_ms: int = 2000) -> None:
        """Advance until no scheduled work remains (bounded)."""
        with self.lock:
            spent = 0
            while self.clock.pending() and spent < budget_ms:
                self.clock.advance(1)
                spent += 1

    # --- observability ---------------------------------------------------------------

    def log_hash(self) -> str:
        """Deterministic digest over the audit and flow/scan logs."""
        h = hashlib.sha256()
        for line in self.orchestrator.audit_log_lines():
            h.update(line.encode())
            h.update(b"\n")
        for line in self.network.flow_log_lines():
            h.update(line.encode())
            h.update(b"\n")
        return h.hexdigest()
