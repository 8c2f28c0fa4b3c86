"""Deterministic discrete-event core.

Time is an integer count of microseconds so replays are bit-exact; every
public interface that talks to humans (config, reports, CLI) uses
milliseconds. Events that share a fire time are delivered in scheduling
order (FIFO), which makes runs reproducible independent of heap internals.
"""
from __future__ import annotations

import hashlib
import random
from heapq import heappop, heappush
from typing import Any

US_PER_MS = 1_000
US_PER_S = 1_000_000


def ms_to_us(value_ms: float) -> int:
    """Convert a millisecond quantity (float ok) to integer microseconds."""
    return round(value_ms * US_PER_MS)


def us_to_ms(value_us: int) -> float:
    return value_us / US_PER_MS


def s_to_us(value_s: float) -> int:
    return round(value_s * US_PER_S)


class SchedulingError(Exception):
    """Raised when an event is scheduled before the current clock."""


class EventQueue:
    """Min-heap of (fire_at_us, seq, payload); seq breaks ties FIFO."""

    __slots__ = ("_heap", "_seq", "_cancelled", "_live")

    def __init__(self) -> None:
        self._heap: list[tuple[int, int, Any]] = []
        self._seq = 0
        self._cancelled: set[int] = set()
        self._live = 0

    def __len__(self) -> int:
        return self._live

    def push(self, fire_at_us: int, payload: Any) -> int:
        """Queue a payload; returns a handle usable with cancel()."""
        seq = self._seq
        self._seq = seq + 1
        heappush(self._heap, (fire_at_us, seq, payload))
        self._live += 1
        return seq

    def cancel(self, handle: int) -> None:
        self._cancelled.add(handle)
        self._live -= 1

    def pop(self) -> tuple[int, Any]:
        """Remove and return (fire_at_us, payload) for the earliest live event."""
        cancelled = self._cancelled
        while True:
            fire_at, seq, payload = heappop(self._heap)
            if seq in cancelled:
                cancelled.discard(seq)
                continue
            self._live -= 1
            return fire_at, payload

    def peek_time(self) -> int | None:
        cancelled = self._cancelled
        heap = self._heap
        while heap and heap[0][1] in cancelled:
            _, seq, _ = heappop(heap)
            cancelled.discard(seq)
        return heap[0][0] if heap else None


class Scheduler:
    """Clock + queue + dispatch loop.

    Events are self-describing: each payload is a tuple whose first element
    is a callable invoked as ``payload[0](payload, now)``. Payloads fire in
    timestamp order (FIFO among ties) and may schedule further events,
    including at the current instant.
    """

    __slots__ = ("now", "queue", "processed")

    def __init__(self) -> None:
        self.now = 0
        self.queue = EventQueue()
        self.processed = 0

    def schedule_at(self, fire_at_us: int, payload: Any) -> int:
        if fire_at_us < self.now:
            raise SchedulingError(
                f"cannot schedule at {fire_at_us} us; clock is at {self.now} us"
            )
        return self.queue.push(fire_at_us, payload)

    def schedule_in(self, delay_us: int, payload: Any) -> int:
        if delay_us < 0:
            raise SchedulingError(f"negative delay {delay_us} us")
        return self.queue.push(self.now + delay_us, payload)

    def cancel(self, handle: int) -> None:
        self.queue.cancel(handle)

    def run_until(self, t_end_us: int) -> int:
        """Process every event with fire_at <= t_end_us; returns the count.

        The clock lands on t_end_us afterwards even if the queue emptied
        earlier, so successive run_until calls compose.
        """
        queue = self.queue
        heap = queue._heap
        cancelled = queue._cancelled
        count = 0
        while heap:
            head = heap[0]
            t = head[0]
            if t > t_end_us:
                break
            heappop(heap)
            if cancelled and head[1] in cancelled:
                cancelled.discard(head[1])
                continue
            queue._live -= 1
            self.now = t
            payload = head[2]
            payload[0](payload, t)
            count += 1
        if t_end_us > self.now:
            self.now = t_end_us
        self.processed += count
        return count

    def run_until_idle(self, limit: int | None = None) -> int:
        """Drain the queue completely (or up to `limit` events)."""
        queue = self.queue
        count = 0
        while len(queue) and (limit is None or count < limit):
            fire_at, payload = queue.pop()
            self.now = fire_at
            payload[0](payload, fire_at)
            count += 1
        self.processed += count
        return count


def derive_seed(seed: int, label: str) -> int:
    """Stable 64-bit sub-seed for (run seed, stream label)."""
    digest = hashlib.blake2b(
        f"{seed}/{label}".encode(), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


class RandomStreams:
    """Named, independently seeded random.Random instances.

    Streams with the same (seed, label) produce identical sequences; distinct
    labels are decorrelated by the hash derivation. Consumers must always ask
    for a stream by label so that adding a new consumer never perturbs the
    draws seen by existing ones.
    """

    __slots__ = ("seed", "_streams")

    def __init__(self, seed: int) -> None:
        self.seed = seed
        self._streams: dict[str, random.Random] = {}

    def stream(self, label: str) -> random.Random:
        rng = self._streams.get(label)
        if rng is None:
            rng = random.Random(derive_seed(self.seed, label))
            self._streams[label] = rng
        return rng
