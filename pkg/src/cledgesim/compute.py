"""Execution resources: bounded slot pools and learned service profiles.

A SlotPool admits up to `capacity` simultaneous executions and keeps a FIFO
buffer for policies that queue instead of redirecting (edge-only, best
effort). Scheduled completion times are tracked in a small heap so the
queue-outlook estimate used by receipts and best-effort scoring is exact
for the local node.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from heapq import heappop, heappush

from .ndn import Name


class CapacityError(Exception):
    pass


class SlotPool:
    __slots__ = (
        "node_id",
        "capacity",
        "in_use",
        "waiting",
        "queued_work_us",
        "_completions",
    )

    def __init__(self, node_id: str, capacity: int) -> None:
        if capacity < 1:
            raise CapacityError(f"{node_id}: capacity must be >= 1, got {capacity}")
        self.node_id = node_id
        self.capacity = capacity
        self.in_use = 0
        self.waiting: deque = deque()
        self.queued_work_us = 0  # summed estimates of everything in `waiting`
        self._completions: list[int] = []  # scheduled completion times, heap

    @property
    def free(self) -> int:
        return self.capacity - self.in_use

    @property
    def utilization(self) -> float:
        return self.in_use / self.capacity

    def try_admit(self, completes_at_us: int) -> bool:
        if self.in_use >= self.capacity:
            return False
        self.in_use += 1
        heappush(self._completions, completes_at_us)
        return True

    def release(self, completed_at_us: int) -> None:
        if self.in_use <= 0:
            raise CapacityError(f"{self.node_id}: release on an empty pool")
        self.in_use -= 1
        # completions heap holds scheduled times; the earliest one is done
        if self._completions and self._completions[0] <= completed_at_us:
            heappop(self._completions)

    def enqueue(self, item, est_us: int = 0) -> None:
        self.waiting.append((item, est_us))
        self.queued_work_us += est_us

    def pop_waiting(self):
        if not self.waiting:
            return None
        item, est_us = self.waiting.popleft()
        self.queued_work_us -= est_us
        return item

    def outlook_us(self, now: int, est_exec_us: int) -> int:
        """Expected wait before a newly arriving task could start.

        0 when a slot is free; otherwise time until the earliest scheduled
        completion, plus the backlog already waiting (its own estimated
        work, spread over the capacity).
        """
        if self.in_use < self.capacity:
            return 0
        earliest = self._completions[0] if self._completions else now
        wait = max(0, earliest - now)
        if self.queued_work_us:
            wait += self.queued_work_us // self.capacity
        return wait


@dataclass(slots=True)
class ServiceProfile:
    """EWMA of observed execution times for one service on one hardware class."""

    mean_us: int = 0
    sample_count: int = 0
    version: int = 0
    min_us: int = 0
    max_us: int = 0

    def update(self, sample_us: int, alpha: float, version: int) -> None:
        if self.sample_count == 0:
            self.mean_us = sample_us
            self.min_us = sample_us
            self.max_us = sample_us
        else:
            self.mean_us = round(alpha * sample_us + (1.0 - alpha) * self.mean_us)
            self.min_us = min(self.min_us, sample_us)
            self.max_us = max(self.max_us, sample_us)
        self.sample_count += 1
        self.version = version


@dataclass(slots=True)
class ProfileTable:
    """A node's locally observed execution statistics, versioned for sync.

    The version counter increases on every update, so a sync broadcast can
    ship exactly the profiles touched since the last one (deltas).
    """

    alpha: float
    profiles: dict[str, ServiceProfile] = field(default_factory=dict)
    clock: int = 0
    last_broadcast_version: int = 0

    def observe(self, service: str, sample_us: int) -> None:
        prof = self.profiles.get(service)
        if prof is None:
            prof = ServiceProfile()
            self.profiles[service] = prof
        self.clock += 1
        prof.update(sample_us, self.alpha, self.clock)

    def deltas_since_last_broadcast(self) -> list[tuple[str, int, int, int]]:
        """[(service, mean_us, sample_count, version)] touched since last call."""
        floor = self.last_broadcast_version
        out = [
            (svc, p.mean_us, p.sample_count, p.version)
            for svc, p in self.profiles.items()
            if p.version > floor
        ]
        self.last_broadcast_version = self.clock
        return out


@dataclass(slots=True, frozen=True)
class TaskReceipt:
    """Answer to an accepted offload: when to come back, and where."""

    ttc_us: int
    thunk: Name
