"""Adversarial traffic generators used by the scripted scenarios."""

from __future__ import annotations

from cpcon.netem.network import Flow
from cpcon.runtime import Enclave

#: decisively exceeds the 50-per-5s detection threshold
DNS_FLOOD_RATE_PER_S = 100
DNS_FLOOD_DURATION_MS = 10_000

#: single outbound flow from the dynamic source-port range
EXFIL_SRC_PORT = 50_000


def schedule_dns_flood(
    enclave: Enclave,
    attacker_id: int,
    dns_server_id: int,
    start_ms: int,
    rate_per_s: int = DNS_FLOOD_RATE_PER_S,
    duration_ms: int = DNS_FLOOD_DURATION_MS,
) -> int:
    """Schedule a high-rate DNS query flood; returns the query count."""
    interval = 1000 // rate_per_s
    count = duration_ms // interval

    def _query() -> None:
        enclave.submit_flow(
            Flow(
                src_host=attacker_id,
                dst_host=dns_server_id,
                dst_port=53,
                src_port=34512,
                protocol="udp",
                kind="dns_query",
                issued_at=enclave.clock.now_ms,
            )
        )

    for i in range(count):
        enclave.clock.schedule_at(start_ms + i * interval, _query)
    return count


def schedule_exfil_attempt(
    enclave: Enclave,
    src_id: int,
    dst_id: int,
    at_ms: int,
    src_port: int = EXFIL_SRC_PORT,
    dst_port: int = 8080,
) -> None:
    """Schedule one outbound connection using a non-standard source port."""
    enclave.clock.schedule_at(
        at_ms,
        lambda: enclave.submit_flow(
            Flow(
                src_host=src_id,
                dst_host=dst_id,
                dst_port=dst_port,
                src_port=src_port,
                protocol="tcp",
                kind="generic",
                issued_at=enclave.clock.now_ms,
            )
        ),
    )


def schedule_background_dns(
    enclave: Enclave,
    client_id: int,
    dns_server_id: int,
    start_ms: int,
    end_ms: int,
    interval_ms: int = 1000,
) -> None:
    """Benign low-rate DNS chatter; never trips the detection threshold."""

    def _query() -> None:
        enclave.submit_flow(
            Flow(
                src_host=client_id,
                dst_host=dns_server_id,
                dst_port=53,
                src_port=33100,
                protocol="udp",
                kind="dns_query",
                issued_at=enclave.clock.now_ms,
            )
        )

    t = start_ms
    while t < end_ms:
        enclave.clock.schedule_at(t, _query)
        t += interval_ms
