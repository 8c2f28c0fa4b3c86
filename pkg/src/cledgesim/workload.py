"""Service catalog, user population, and task arrival generation.

Each service belongs to one deadline category and draws its deadline once
per run; each user is pinned to one service and draws its light/heavy task
rates once per run. Arrivals are Poisson by default (exact piecewise
generation under the alternating profile, courtesy of memorylessness) or
evenly spaced when `workload.arrival` is "uniform".
"""
from __future__ import annotations

from dataclasses import dataclass

from .engine import US_PER_S, RandomStreams, ms_to_us
from .topology import Topology

CAT_SENSITIVE = "delay-sensitive"
CAT_REGULAR = "regular"
CAT_TOLERANT = "delay-tolerant"
CATEGORIES = (CAT_SENSITIVE, CAT_REGULAR, CAT_TOLERANT)

LOAD_LIGHT = "light"
LOAD_HEAVY = "heavy"
LOAD_ALTERNATING = "alternating"


@dataclass(slots=True, frozen=True)
class ServiceSpec:
    name: str
    category: str
    deadline_us: int
    exec_fraction: float  # per-service draw; used when exec_draw == "per_service"


@dataclass(slots=True, frozen=True)
class UserSpec:
    user_id: str
    service: str
    rate_light_hz: float
    rate_heavy_hz: float


@dataclass(slots=True)
class Task:
    task_id: int
    user_id: str
    service: str
    category: str
    deadline_us: int
    input_hash: str
    input_size: int
    result_size: int
    created_at_us: int
    home_network: int
    name: tuple
    # lifecycle, filled in by the simulation
    offloaded_at_us: int = -1
    completed_at_us: int = -1
    executed_at: str | None = None
    exec_network: int | None = None
    outcome: str | None = None
    redirects: int = 0
    exec_us: int = -1
    location: str | None = None


def partition_sizes(total: int, buckets: int) -> list[int]:
    """Near-equal split, remainder to the earlier buckets: 50 -> [17, 17, 16]."""
    base, extra = divmod(total, buckets)
    return [base + (1 if i < extra else 0) for i in range(buckets)]


def build_catalog(streams: RandomStreams, cfg) -> dict[str, ServiceSpec]:
    rng = streams.stream("catalog")
    sizes = partition_sizes(cfg.services, len(CATEGORIES))
    ranges = {
        CAT_SENSITIVE: cfg.sensitive_deadline_ms,
        CAT_REGULAR: cfg.regular_deadline_ms,
        CAT_TOLERANT: cfg.tolerant_deadline_ms,
    }
    width = max(2, len(str(cfg.services - 1)))
    catalog: dict[str, ServiceSpec] = {}
    idx = 0
    lo_f, hi_f = cfg.exec_fraction_range
    for cat, size in zip(CATEGORIES, sizes):
        lo, hi = ranges[cat]
        for _ in range(size):
            name = f"s{idx:0{width}d}"
            deadline = ms_to_us(rng.uniform(lo, hi))
            frac = rng.uniform(lo_f, hi_f)
            catalog[name] = ServiceSpec(name, cat, deadline, frac)
            idx += 1
    return catalog


def build_users(
    topology: Topology, catalog: dict[str, ServiceSpec], streams: RandomStreams, cfg
) -> dict[str, UserSpec]:
    assign = streams.stream("service-assignment")
    rates = streams.stream("rates")
    # Shuffled round-robin: random pairing, but every service keeps at least
    # one user whenever users >= services, so per-service metrics stay defined.
    names = list(catalog)
    assign.shuffle(names)
    light_lo, light_hi = cfg.light_rate_hz
    heavy_lo, heavy_hi = cfg.heavy_rate_hz
    users: dict[str, UserSpec] = {}
    for idx, user_id in enumerate(sorted(topology.users)):
        service = names[idx % len(names)]
        users[user_id] = UserSpec(
            user_id,
            service,
            rates.uniform(light_lo, light_hi),
            rates.uniform(heavy_lo, heavy_hi),
        )
    return users


def arrival_times(
    user: UserSpec, load: str, duration_us: int, streams: RandomStreams, cfg
) -> list[int]:
    """All offload instants for one user over [0, duration)."""
    rng = streams.stream("workload")
    period_us = ms_to_us(cfg.alternating_period_s * 1000.0)

    def rate_at(t_us: int) -> float:
        if load == LOAD_LIGHT:
            return user.rate_light_hz
        if load == LOAD_HEAVY:
            return user.rate_heavy_hz
        # alternating: start light, switch every period
        return (
            user.rate_light_hz
            if (t_us // period_us) % 2 == 0
            else user.rate_heavy_hz
        )

    out: list[int] = []
    t = 0
    if cfg.arrival == "poisson":
        while True:
            rate = rate_at(t)
            gap = round(rng.expovariate(rate) * US_PER_S)
            if load == LOAD_ALTERNATING:
                boundary = (t // period_us + 1) * period_us
                if t + gap >= boundary:
                    # memoryless: restart the draw at the boundary rate
                    t = boundary
                    if t >= duration_us:
                        break
                    continue
            t += gap
            if t >= duration_us:
                break
            out.append(t)
    else:  # uniform spacing
        while True:
            rate = rate_at(t)
            t += round(US_PER_S / rate)
            if t >= duration_us:
                break
            out.append(t)
    return out


class TaskFactory:
    """Mints Task objects with content hashes (and optional duplicates)."""

    __slots__ = ("_streams", "_cfg", "_task_cfg", "_catalog", "_topology",
                 "_next_id", "_history")

    def __init__(
        self, streams: RandomStreams, cfg, task_cfg, catalog,
        topology: Topology,
    ) -> None:
        self._streams = streams
        self._cfg = cfg
        self._task_cfg = task_cfg
        self._catalog = catalog
        self._topology = topology
        self._next_id = 0
        self._history: dict[str, list[str]] = {}

    def make(self, user_id: str, service: str, created_at_us: int) -> Task:
        rng = self._streams.stream("input")
        spec = self._catalog[service]
        history = self._history.setdefault(service, [])
        dup = self._task_cfg.duplicate_input_prob
        if history and dup > 0 and rng.random() < dup:
            input_hash = history[rng.randrange(len(history))]
        else:
            input_hash = f"{rng.getrandbits(48):012x}"
            if len(history) < 256:
                history.append(input_hash)
        task_id = self._next_id
        self._next_id += 1
        return Task(
            task_id=task_id,
            user_id=user_id,
            service=service,
            category=spec.category,
            deadline_us=spec.deadline_us,
            input_hash=input_hash,
            input_size=self._cfg.input_size_bytes,
            result_size=self._cfg.result_size_bytes,
            created_at_us=created_at_us,
            home_network=self._topology.users[user_id].network,
            name=(service, input_hash),
        )


def exec_time_us(task: Task, spec: ServiceSpec, streams: RandomStreams, cfg) -> int:
    """Execution time draw: fixed per service, or fresh per task."""
    if cfg.exec_draw == "per_service":
        return round(spec.exec_fraction * task.deadline_us)
    lo, hi = cfg.exec_fraction_range
    frac = streams.stream("exec-times").uniform(lo, hi)
    return round(frac * task.deadline_us)
