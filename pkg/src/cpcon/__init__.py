"""Centralized CPCON orchestration over an emulated multi-subnet network.

Subpackages:
    policy        - declarative directive/event language and wire formats
    netem         - deterministic virtual network (hosts, routers, clock)
    agents        - per-host enforcement agents and security modules
    orchestrator  - correlation engine, policy repository, verification
    api           - northbound HTTP/SSE interface for the operator console
    scenario      - scripted attack timelines, fault injection, metrics
"""

__version__ = "0.1.0"
