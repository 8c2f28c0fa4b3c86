"""Run metrics: satisfaction, overhead, latency, reliability, placement mix.

The traffic ledger charges every wire crossing as bytes x hop count of the
link it traversed, bucketed by purpose. Normalised overhead divides the
grand total by the sum of task input sizes, so a value of 6.0 reads as "six
bytes moved per byte of useful input".
"""
from __future__ import annotations

import statistics
from dataclasses import dataclass, field

from .engine import us_to_ms
from .workload import CAT_SENSITIVE, CAT_REGULAR, CAT_TOLERANT, CATEGORIES, Task

CAT_TASK_FORWARDING = "task-forwarding"
CAT_INPUT_FETCH = "input-fetch"
CAT_RESULT_RETURN = "result-return"
CAT_SYNC_TIER1 = "sync-tier1"
CAT_SYNC_TIER2 = "sync-tier2"
CAT_THUNK_FETCH = "thunk-fetch"
TRAFFIC_CATEGORIES = (
    CAT_TASK_FORWARDING,
    CAT_INPUT_FETCH,
    CAT_RESULT_RETURN,
    CAT_SYNC_TIER1,
    CAT_SYNC_TIER2,
    CAT_THUNK_FETCH,
)

OUTCOME_ON_TIME = "on-time"
OUTCOME_LATE = "late"
OUTCOME_DROPPED = "dropped"

LOC_HOME = "home-edge"
LOC_CROSS = "cross-edge"
LOC_CLOUD = "cloud"


class TrafficLedger:
    """Byte-hop accounting per traffic category."""

    __slots__ = ("bytes_by_category",)

    def __init__(self) -> None:
        self.bytes_by_category: dict[str, int] = {
            c: 0 for c in TRAFFIC_CATEGORIES
        }

    def charge(self, category: str, wire_bytes: int, hops: int) -> None:
        self.bytes_by_category[category] += wire_bytes * hops

    @property
    def total(self) -> int:
        return sum(self.bytes_by_category.values())


@dataclass(slots=True)
class MetricsReport:
    generated: int
    on_time: int
    late: int
    dropped: int
    satisfaction: float
    overhead: float
    bytes_by_category: dict[str, int]
    latency_ms: dict[str, float]  # per task category, completed tasks
    latency_overall_ms: float
    reliability_sd_ms: dict[str, float]  # probe service -> population SD
    location_fractions: dict[str, float]
    completed: int

    def to_dict(self) -> dict:
        return {
            "generated": self.generated,
            "on_time": self.on_time,
            "late": self.late,
            "dropped": self.dropped,
            "completed": self.completed,
            "satisfaction": self.satisfaction,
            "overhead": self.overhead,
            "bytes_by_category": dict(self.bytes_by_category),
            "latency_ms": dict(self.latency_ms),
            "latency_overall_ms": self.latency_overall_ms,
            "reliability_sd_ms": dict(self.reliability_sd_ms),
            "location_fractions": dict(self.location_fractions),
        }


class MetricsCollector:
    """Accumulates task outcomes and produces a MetricsReport."""

    def __init__(self, probe_services: tuple[str, ...],
                 reliability_window_us: int) -> None:
        self.ledger = TrafficLedger()
        self.tasks: list[Task] = []
        self.probe_services = probe_services
        self.reliability_window_us = reliability_window_us

    def add_task(self, task: Task) -> None:
        self.tasks.append(task)

    def finalize(self, horizon_us: int) -> MetricsReport:
        generated = len(self.tasks)
        on_time = late = dropped = 0
        input_bytes = 0
        lat_by_cat: dict[str, list[int]] = {c: [] for c in CATEGORIES}
        window_start = horizon_us - self.reliability_window_us
        probe_lat: dict[str, list[float]] = {s: [] for s in self.probe_services}
        loc_counts = {LOC_HOME: 0, LOC_CROSS: 0, LOC_CLOUD: 0}

        for t in self.tasks:
            input_bytes += t.input_size
            if t.outcome == OUTCOME_ON_TIME:
                on_time += 1
            elif t.outcome == OUTCOME_LATE:
                late += 1
            else:
                dropped += 1
                continue
            latency = t.completed_at_us - t.created_at_us
            lat_by_cat[t.category].append(latency)
            if (t.service in probe_lat
                    and t.completed_at_us >= window_start):
                probe_lat[t.service].append(us_to_ms(latency))
            loc_counts[t.location] += 1

        if generated != on_time + late + dropped:
            raise AssertionError(
                "task conservation violated: "
                f"{generated} != {on_time} + {late} + {dropped}"
            )

        completed = on_time + late
        satisfaction = on_time / generated if generated else 0.0
        overhead = self.ledger.total / input_bytes if input_bytes else 0.0

        latency_ms: dict[str, float] = {}
        for cat, values in lat_by_cat.items():
            if values:
                latency_ms[cat] = us_to_ms(sum(values) / len(values))
        # Overall latency is the unweighted mean of the per-category means,
        # not the task-weighted mean: the categories differ in volume, and
        # the headline number should not drown slow-but-rare categories.
        latency_overall = (
            sum(latency_ms.values()) / len(latency_ms) if latency_ms else 0.0
        )

        reliability = {
            svc: (statistics.pstdev(vals) if len(vals) >= 2 else 0.0)
            for svc, vals in probe_lat.items()
        }
        fractions = {
            loc: (count / completed if completed else 0.0)
            for loc, count in loc_counts.items()
        }
        return MetricsReport(
            generated=generated,
            on_time=on_time,
            late=late,
            dropped=dropped,
            satisfaction=satisfaction,
            overhead=overhead,
            bytes_by_category=dict(self.ledger.bytes_by_category),
            latency_ms=latency_ms,
            latency_overall_ms=latency_overall,
            reliability_sd_ms=reliability,
            location_fractions=fractions,
            completed=completed,
        )
