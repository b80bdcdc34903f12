"""Per-host enforcement agents and deployable security modules."""

from cpcon.agents.agent import ControlChannel, HostAgent
from cpcon.agents.modules import (
    DnsQueryMonitor,
    DnsRateLimiter,
    IsolateModule,
    ModuleSignal,
    SecurityModule,
    ServerPortMonitor,
    build_module,
)

__all__ = [
    "ControlChannel",
    "DnsQueryMonitor",
    "DnsRateLimiter",
    "HostAgent",
    "IsolateModule",
    "ModuleSignal",
    "SecurityModule",
    "ServerPortMonitor",
    "build_module",
]
