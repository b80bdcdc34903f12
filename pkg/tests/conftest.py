"""Shared fixtures: enclaves, fixture documents, randomized rule helpers."""

from __future__ import annotations

import json
import random
import sys
from importlib import resources
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))  # tests/oracles.py

from cpcon.netem.network import Flow, Network
from cpcon.netem.rules import Direction, RouterRule, RuleMatch, Verdict
from cpcon.orchestrator.engine import OrchestratorConfig
from cpcon.runtime import Enclave


def fixture_text(name: str) -> str:
    return resources.files("cpcon.fixtures").joinpath(name).read_text()


def fixture_json(name: str) -> dict:
    return json.loads(fixture_text(name))


@pytest.fixture
def enclave() -> Enclave:
    """Reference testbed at the scenario baseline posture."""
    return Enclave.build(id_seed=42, config=OrchestratorConfig(baseline_level=4))


@pytest.fixture
def fig8_directive():
    from cpcon.policy.wire import parse_directive

    return parse_directive(fixture_text("directive_cpcon3.json"))


@pytest.fixture
def fig9_directive():
    from cpcon.policy.wire import parse_directive

    return parse_directive(fixture_text("directive_cpcon2.json"))


PORT_POOL = (22, 53, 80, 443, 8080, 50000)


def random_rule(rng: random.Random, rule_id: int, subnets, host_ids) -> RouterRule:
    ports = None if rng.random() < 0.3 else frozenset(rng.sample(PORT_POOL, rng.randint(1, 4)))
    return RouterRule(
        rule_id=rule_id,
        match=RuleMatch(
            subnet=rng.choice(subnets),
            direction=rng.choice(list(Direction)),
            ports=ports,
            protocol=rng.choice([None, "tcp", "udp"]),
        ),
        verdict=rng.choice(list(Verdict)),
        source_exception=rng.choice([None, None, rng.choice(host_ids)]),
    )


def randomize_ruleset(network: Network, rng: random.Random, max_rules_per_router: int = 6):
    """Install a random ruleset across every router of a network."""
    subnets = sorted(network.topology.subnets)
    host_ids = sorted(network.topology.nodes)
    for router_name in sorted(network.tables):
        n = rng.randint(0, max_rules_per_router)
        for rule_id in rng.sample(range(1, 100), n):
            network.apply_rule(router_name, random_rule(rng, rule_id, subnets, host_ids))


def random_flow(rng: random.Random, host_ids) -> Flow:
    src, dst = rng.choice(host_ids), rng.choice(host_ids)
    return Flow(
        src_host=src,
        dst_host=dst,
        dst_port=rng.choice(PORT_POOL),
        src_port=rng.choice(PORT_POOL),
        protocol=rng.choice(["tcp", "udp"]),
        kind=rng.choice(["generic", "http", "dns_query"]),
    )
