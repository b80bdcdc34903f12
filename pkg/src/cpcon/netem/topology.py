"""Topology model and loader for the emulated network.

A topology is declared as JSON: subnets with a criticality tag, hosts bound
to subnets, and one router per subnet. Host ids may be pinned in the file
(the reference testbed pins the subnet-2 attacker); unpinned nodes draw ids
from a seeded allocator so runs are reproducible.
"""

from __future__ import annotations

import enum
import json
import random
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

from cpcon.errors import (
    DuplicateHostIdError,
    MalformedJsonError,
    OrphanHostError,
    SchemaViolationError,
    UnknownHostError,
    UnknownRouterError,
    UnknownSubnetError,
)

HOST_ID_MIN = 10000
HOST_ID_MAX = 65535

VALID_ROLES = ("generic", "server", "router", "orchestrator")
VALID_CRITICALITY = ("essential", "non_essential")


class Criticality(enum.Enum):
    ESSENTIAL = "essential"
    NON_ESSENTIAL = "non_essential"


@dataclass(frozen=True)
class Subnet:
    name: str
    criticality: Criticality


@dataclass
class VirtualHost:
    """A node in the emulated network. ``isolated`` is runtime state."""

    host_id: int
    name: str
    subnet: str
    role: str
    listening_ports: set[int] = field(default_factory=set)
    isolated: bool = False


@dataclass(frozen=True)
class Router:
    """The single gateway guarding one subnet boundary."""

    name: str
    subnet: str
    host_id: int


class IdAllocator:
    """Seeded, collision-free host id source over 10000..65535."""

    def __init__(self, seed: int, reserved: Iterable[int] = ()):
        self._rng = random.Random(seed)
        self._used: set[int] = set(reserved)

    def reserve(self, host_id: int) -> None:
        if host_id in self._used:
            raise DuplicateHostIdError(f"host id {host_id} already in use")
        self._used.add(host_id)

    def allocate(self) -> int:
        while True:
            candidate = self._rng.randint(HOST_ID_MIN, HOST_ID_MAX)
            if candidate not in self._used:
                self._used.add(candidate)
                return candidate


class Topology:
    """Immutable-after-load view of subnets, hosts, routers, adjacency."""

    def __init__(
        self,
        name: str,
        subnets: dict[str, Subnet],
        nodes: dict[int, VirtualHost],
        routers: dict[str, Router],
    ):
        self.name = name
        self.subnets = subnets
        self.nodes = nodes
        self.routers = routers
        self._by_name = {h.name: h for h in nodes.values()}
        #: subnet name -> next-hop router name
        self.adjacency: dict[str, str] = {r.subnet: r.name for r in routers.values()}

    # --- lookups ---------------------------------------------------------

    def host(self, host_id: int) -> VirtualHost:
        try:
            return self.nodes[host_id]
        except KeyError:
            raise UnknownHostError(f"no host with id {host_id}") from None

    def has_host(self, host_id: int) -> bool:
        return host_id in self.nodes

    def host_by_name(self, name: str) -> VirtualHost:
        try:
            return self._by_name[name]
        except KeyError:
            raise UnknownHostError(f"no host named {name!r}") from None

    def subnet(self, name: str) -> Subnet:
        try:
            return self.subnets[name]
        except KeyError:
            raise UnknownSubnetError(f"no subnet named {name!r}") from None

    def router(self, name: str) -> Router:
        try:
            return self.routers[name]
        except KeyError:
            raise UnknownRouterError(f"no router named {name!r}") from None

    def router_for_subnet(self, subnet: str) -> Router:
        self.subnet(subnet)
        return self.routers[self.adjacency[subnet]]

    def hosts_in_subnet(self, subnet: str, include_router: bool = False) -> list[VirtualHost]:
        """Hosts of a subnet, router excluded unless asked for, id order."""
        self.subnet(subnet)
        out = [
            h
            for h in self.nodes.values()
            if h.subnet == subnet and (include_router or h.role != "router")
        ]
        return sorted(out, key=lambda h: h.host_id)

    def managed_hosts(self) -> list[VirtualHost]:
        """Agent-bearing hosts: generics and servers, id order."""
        return sorted(
            (h for h in self.nodes.values() if h.role in ("generic", "server")),
            key=lambda h: h.host_id,
        )

    def servers(self) -> list[VirtualHost]:
        return sorted(
            (h for h in self.nodes.values() if h.role == "server"),
            key=lambda h: h.host_id,
        )

    def orchestrator_host(self) -> VirtualHost:
        for h in self.nodes.values():
            if h.role == "orchestrator":
                return h
        raise UnknownHostError("topology has no orchestrator node")


def _require(doc: Mapping[str, Any], key: str, kind: type) -> Any:
    if key not in doc:
        raise SchemaViolationError(f"topology document is missing {key!r}")
    value = doc[key]
    if not isinstance(value, kind):
        raise SchemaViolationError(f"topology field {key!r} must be {kind.__name__}")
    return value


def _check_ports(raw: Any, where: str) -> set[int]:
    if raw is None:
        return set()
    if not isinstance(raw, list):
        raise SchemaViolationError(f"{where}: listening_ports must be an array")
    ports = set()
    for p in raw:
        if not isinstance(p, int) or isinstance(p, bool) or not 1 <= p <= 65535:
            raise SchemaViolationError(f"{where}: bad port {p!r}")
        ports.add(p)
    return ports


def load_topology(config: str | bytes | Mapping[str, Any], id_seed: int | None = None) -> Topology:
    """Load and validate a topology document.

    ``id_seed`` overrides the document's ``id_seed`` field; ids pinned in
    the file always win over allocated ones.
    """
    if isinstance(config, Mapping):
        doc: Mapping[str, Any] = config
    else:
        try:
            doc = json.loads(config)
        except (json.JSONDecodeError, TypeError, ValueError) as exc:
            raise MalformedJsonError(f"topology is not valid JSON: {exc}") from exc
        if not isinstance(doc, dict):
            raise SchemaViolationError("topology document must be a JSON object")

    name = doc.get("name", "unnamed")
    subnets_raw = _require(doc, "subnets", list)
    hosts_raw = _require(doc, "hosts", list)
    routers_raw = _require(doc, "routers", list)
    seed = id_seed if id_seed is not None else doc.get("id_seed", 0)

    subnets: dict[str, Subnet] = {}
    for entry in subnets_raw:
        if not isinstance(entry, Mapping) or "name" not in entry:
            raise SchemaViolationError(f"bad subnet entry: {entry!r}")
        crit = entry.get("criticality", "essential")
        if crit not in VALID_CRITICALITY:
            raise SchemaViolationError(f"subnet {entry['name']}: bad criticality {crit!r}")
        if entry["name"] in subnets:
            raise SchemaViolationError(f"duplicate subnet {entry['name']!r}")
        subnets[entry["name"]] = Subnet(entry["name"], Criticality(crit))

    # two passes: reserve pinned ids first so the allocator never collides
    pinned: list[tuple[Mapping[str, Any], bool]] = []
    for entry in hosts_raw:
        if not isinstance(entry, Mapping) or "name" not in entry or "subnet" not in entry:
            raise SchemaViolationError(f"bad host entry: {entry!r}")
        pinned.append((entry, False))
    for entry in routers_raw:
        if not isinstance(entry, Mapping) or "name" not in entry or "subnet" not in entry:
            raise SchemaViolationError(f"bad router entry: {entry!r}")
        pinned.append((entry, True))

    allocator = IdAllocator(seed)
    for entry, _ in pinned:
        raw_id = entry.get("host_id")
        if raw_id is not None:
            if not isinstance(raw_id, int) or isinstance(raw_id, bool):
                raise SchemaViolationError(f"{entry['name']}: host_id must be an integer")
            allocator.reserve(raw_id)

    nodes: dict[int, VirtualHost] = {}
    routers: dict[str, Router] = {}
    seen_names: set[str] = set()
    for entry, is_router in pinned:
        if entry["name"] in seen_names:
            raise SchemaViolationError(f"duplicate node name {entry['name']!r}")
        seen_names.add(entry["name"])
        if entry["subnet"] not in subnets:
            raise OrphanHostError(
                f"node {entry['name']!r} references unknown subnet {entry['subnet']!r}"
            )
        host_id = entry.get("host_id")
        if host_id is None:
            host_id = allocator.allocate()
        if is_router:
            role = "router"
            ports = _check_ports(entry.get("listening_ports", [22]), entry["name"])
        else:
            role = entry.get("role", "generic")
            if role not in VALID_ROLES or role == "router":
                raise SchemaViolationError(f"{entry['name']}: bad role {role!r}")
            ports = _check_ports(entry.get("listening_ports"), entry["name"])
        nodes[host_id] = VirtualHost(
            host_id=host_id,
            name=entry["name"],
            subnet=entry["subnet"],
            role=role,
            listening_ports=ports,
        )
        if is_router:
            if any(r.subnet == entry["subnet"] for r in routers.values()):
                raise SchemaViolationError(f"subnet {entry['subnet']!r} has two routers")
            routers[entry["name"]] = Router(
                name=entry["name"], subnet=entry["subnet"], host_id=host_id
            )

    for subnet_name in subnets:
        if not any(r.subnet == subnet_name for r in routers.values()):
            raise SchemaViolationError(f"subnet {subnet_name!r} has no router")

    return Topology(name=name, subnets=subnets, nodes=nodes, routers=routers)
