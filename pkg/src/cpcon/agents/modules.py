"""Deployable security modules: monitors, rate limiter, isolator.

Modules are the emulated analog of dynamically loaded enforcement code. A
module sees every flow originating at its host, may raise an alert, and
casts an enforcement vote (allow / deny / shaped). One module per kind is
active on a host at any time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Mapping

from cpcon.errors import InvalidParamsError
from cpcon.netem.network import Flow
from cpcon.policy.model import Alert

ALLOW = "allow"
DENY = "deny"
SHAPED = "shaped"

#: IANA dynamic range; outbound use from a server is an exfiltration marker
EPHEMERAL_LOW = 49152
EPHEMERAL_HIGH = 65535

DNS_DOS_EVENT = "DNS_DoS"
CPCON3_EVENT = "CPCON3"


@dataclass(frozen=True)
class ModuleSignal:
    """An alert raised by a module, plus local actions already taken."""

    alert: Alert
    actions_taken: tuple[str, ...] = ()


def _positive_int(params: Mapping[str, Any], key: str, default: int) -> int:
    value = params.get(key, default)
    if not isinstance(value, int) or isinstance(value, bool) or value <= 0:
        raise InvalidParamsError(f"{key} must be a positive integer, got {value!r}")
    return value


class SecurityModule:
    """Base module: observes flows, votes on enforcement."""

    kind = "base"

    def __init__(self, module_id: str, host_id: int, params: Mapping[str, Any], deployed_at: int):
        self.module_id = module_id
        self.host_id = host_id
        self.params = dict(params)
        self.deployed_at = deployed_at

    def observe(self, flow: Flow, now_ms: int) -> ModuleSignal | None:
        return None

    def enforce(self, flow: Flow, now_ms: int) -> str:
        return ALLOW

    def drain_signals(self) -> list[ModuleSignal]:
        """Signals produced as a side effect of enforcement."""
        return []

    def describe(self) -> dict[str, Any]:
        return {"module_id": self.module_id, "kind": self.kind, "params": self.params}


class DnsQueryMonitor(SecurityModule):
    """Sliding-window counter over outbound DNS queries.

    Raises one DNS_DoS alert per window once the count in the trailing
    window exceeds the threshold.
    """

    kind = "dns_monitor"

    def __init__(self, module_id, host_id, params, deployed_at):
        super().__init__(module_id, host_id, params, deployed_at)
        self.threshold = _positive_int(self.params, "threshold", 50)
        self.window_ms = _positive_int(self.params, "window_ms", 5000)
        self._timestamps: list[int] = []
        self._last_alert_ms: int | None = None

    def observe(self, flow: Flow, now_ms: int) -> ModuleSignal | None:
        if flow.src_host != self.host_id or flow.kind != "dns_query":
            return None
        self._timestamps.append(now_ms)
        floor = now_ms - self.window_ms
        while self._timestamps and self._timestamps[0] <= floor:
            self._timestamps.pop(0)
        if len(self._timestamps) <= self.threshold:
            return None
        if self._last_alert_ms is not None and now_ms - self._last_alert_ms < self.window_ms:
            return None
        self._last_alert_ms = now_ms
        return ModuleSignal(Alert(self.host_id, DNS_DOS_EVENT, observed_at=now_ms))


class DnsRateLimiter(SecurityModule):
    """Token-bucket shaper over outbound DNS queries.

    Integer millitoken arithmetic keeps refill exact: one query costs 1000
    millitokens and the bucket gains ``rate_cap_per_s`` millitokens per ms.
    Bucket depth is a single token, so no burst can push any sliding
    one-second window above the cap. Emits one confirmation alert when it
    first shapes traffic.
    """

    kind = "dns_response"

    COST = 1000

    def __init__(self, module_id, host_id, params, deployed_at):
        super().__init__(module_id, host_id, params, deployed_at)
        self.rate_cap = _positive_int(self.params, "rate_cap_per_s", 5)
        self._millitokens = self.COST
        self._refilled_at = deployed_at
        self._confirmed = False
        self._pending_signal: ModuleSignal | None = None

    def _refill(self, now_ms: int) -> None:
        elapsed = now_ms - self._refilled_at
        if elapsed > 0:
            self._millitokens = min(self.COST, self._millitokens + elapsed * self.rate_cap)
            self._refilled_at = now_ms

    def enforce(self, flow: Flow, now_ms: int) -> str:
        if flow.src_host != self.host_id or flow.kind != "dns_query":
            return ALLOW
        self._refill(now_ms)
        if self._millitokens >= self.COST:
            self._millitokens -= self.COST
            return ALLOW
        if not self._confirmed:
            # attack confirmed: notify the orchestrator exactly once
            self._confirmed = True
            self._pending_signal = ModuleSignal(
                Alert(self.host_id, DNS_DOS_EVENT, observed_at=now_ms),
                actions_taken=("rate_limited",),
            )
        return SHAPED

    def drain_signals(self) -> list[ModuleSignal]:
        signal, self._pending_signal = self._pending_signal, None
        return [signal] if signal is not None else []


class ServerPortMonitor(SecurityModule):
    """Flags and blocks outbound flows sourced from the ephemeral range."""

    kind = "server_monitor"

    def __init__(self, module_id, host_id, params, deployed_at):
        super().__init__(module_id, host_id, params, deployed_at)
        self.low = _positive_int(self.params, "ephemeral_low", EPHEMERAL_LOW)
        self.high = _positive_int(self.params, "ephemeral_high", EPHEMERAL_HIGH)
        if not (1 <= self.low <= self.high <= 65535):
            raise InvalidParamsError(f"bad ephemeral range {self.low}..{self.high}")
        self.window_ms = _positive_int(self.params, "window_ms", 5000)
        self._last_alert_ms: int | None = None

    def _indicator(self, flow: Flow) -> bool:
        return flow.src_host == self.host_id and self.low <= flow.src_port <= self.high

    def observe(self, flow: Flow, now_ms: int) -> ModuleSignal | None:
        if not self._indicator(flow):
            return None
        if self._last_alert_ms is not None and now_ms - self._last_alert_ms < self.window_ms:
            return None
        self._last_alert_ms = now_ms
        return ModuleSignal(
            Alert(self.host_id, CPCON3_EVENT, observed_at=now_ms),
            actions_taken=("block_connection",),
        )

    def enforce(self, flow: Flow, now_ms: int) -> str:
        return DENY if self._indicator(flow) else ALLOW


class IsolateModule(SecurityModule):
    """Removes the host from the network: every non-control flow is denied."""

    kind = "isolate"

    def enforce(self, flow: Flow, now_ms: int) -> str:
        return DENY


_MODULE_KINDS: dict[str, type[SecurityModule]] = {
    cls.kind: cls
    for cls in (DnsQueryMonitor, DnsRateLimiter, ServerPortMonitor, IsolateModule)
}

MODULE_KINDS = tuple(sorted(_MODULE_KINDS))


def build_module(
    kind: str, module_id: str, host_id: int, params: Mapping[str, Any], deployed_at: int
) -> SecurityModule:
    """Instantiate a module, validating kind and params."""
    try:
        cls = _MODULE_KINDS[kind]
    except KeyError:
        raise InvalidParamsError(f"unknown module kind {kind!r}") from None
    if not isinstance(params, Mapping):
        raise InvalidParamsError("module params must be a mapping")
    return cls(module_id, host_id, params, deployed_at)
