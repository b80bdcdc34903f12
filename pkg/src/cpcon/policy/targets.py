"""Resolution of target selectors against a topology snapshot."""

from __future__ import annotations

from cpcon.errors import UnknownHostError
from cpcon.netem.topology import Topology
from cpcon.policy.model import SelectorKind, TargetSelector


def resolve_targets(sel: TargetSelector, topo: Topology) -> set[int]:
    """Resolve a selector to the set of host ids it names.

    Deterministic and idempotent for a fixed topology: ``all_hosts`` is the
    managed fleet (generics and servers), ``all_servers`` the server role,
    a subnet selector is that subnet's hosts excluding its router.
    """
    if sel.kind is SelectorKind.ALL_HOSTS:
        return {h.host_id for h in topo.managed_hosts()}
    if sel.kind is SelectorKind.ALL_SERVERS:
        return {h.host_id for h in topo.servers()}
    if sel.kind is SelectorKind.SUBNET:
        assert sel.subnet_name is not None
        return {h.host_id for h in topo.hosts_in_subnet(sel.subnet_name)}
    assert sel.host_id is not None
    if not topo.has_host(sel.host_id):
        raise UnknownHostError(f"selector names unknown host {sel.host_id}")
    return {sel.host_id}
