"""Discrete-event virtual clock with millisecond resolution.

Scheduled callbacks fire in (timestamp, insertion sequence) order, which
makes every run with the same schedule byte-for-byte reproducible.
"""

from __future__ import annotations

import heapq
from typing import Any, Callable


class _Scheduled:
    __slots__ = ("at_ms", "seq", "fn", "args", "cancelled")

    def __init__(self, at_ms: int, seq: int, fn: Callable[..., Any], args: tuple):
        self.at_ms = at_ms
        self.seq = seq
        self.fn = fn
        self.args = args
        self.cancelled = False

    def __lt__(self, other: "_Scheduled") -> bool:
        return (self.at_ms, self.seq) < (other.at_ms, other.seq)


class VirtualClock:
    """Single-owner event clock; not safe for concurrent mutation."""

    def __init__(self, start_ms: int = 0):
        self._now = int(start_ms)
        self._seq = 0
        self._heap: list[_Scheduled] = []

    @property
    def now_ms(self) -> int:
        return self._now

    def schedule_at(self, at_ms: int, fn: Callable[..., Any], *args: Any) -> _Scheduled:
        """Schedule ``fn(*args)`` at an absolute virtual time (>= now)."""
        if at_ms < self._now:
            raise ValueError(f"cannot schedule in the past: {at_ms} < {self._now}")
        entry = _Scheduled(int(at_ms), self._seq, fn, args)
        self._seq += 1
        heapq.heappush(self._heap, entry)
        return entry

    def schedule_in(self, delay_ms: int, fn: Callable[..., Any], *args: Any) -> _Scheduled:
        """Schedule ``fn(*args)`` after a relative delay (>= 0)."""
        if delay_ms < 0:
            raise ValueError(f"delay must be >= 0, got {delay_ms}")
        return self.schedule_at(self._now + int(delay_ms), fn, *args)

    def cancel(self, entry: _Scheduled) -> None:
        entry.cancelled = True

    def advance(self, dt_ms: int) -> int:
        """Advance the clock by ``dt_ms``, firing everything due in order.

        Callbacks may schedule further work; anything landing inside the
        window fires during the same call. Returns the number of callbacks
        fired. ``advance(0)`` fires only work due at the current instant.
        """
        if dt_ms < 0:
            raise ValueError(f"dt must be >= 0, got {dt_ms}")
        target = self._now + int(dt_ms)
        fired = 0
        while self._heap and self._heap[0].at_ms <= target:
            entry = heapq.heappop(self._heap)
            if entry.cancelled:
                continue
            self._now = entry.at_ms
            entry.fn(*entry.args)
            fired += 1
        self._now = target
        return fired

    def run_until(self, at_ms: int) -> int:
        """Advance to an absolute virtual time."""
        if at_ms < self._now:
            raise ValueError(f"cannot run backwards to {at_ms}")
        return self.advance(at_ms - self._now)

    def pending(self) -> int:
        """Number of not-yet-cancelled scheduled callbacks."""
        return sum(1 for e in self._heap if not e.cancelled)
