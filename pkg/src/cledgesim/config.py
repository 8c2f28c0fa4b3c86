"""Run configuration: nested dataclasses, JSON loading, strict validation.

Unknown keys, wrong types, and out-of-range values are all rejected with a
ConfigError naming the first offending dotted key path, so a typo in a
config file fails loudly instead of silently running the defaults.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field


class ConfigError(Exception):
    pass


@dataclass(slots=True)
class TopologyConfig:
    networks: int = 5
    ens_per_network: int = 3
    user_link_ms: float = 1.0
    intra_one_way_ms: float = 2.0
    intra_hops: int = 2
    eg_eg_one_way_ms: float = 10.0
    eg_eg_hops: int = 1
    eg_cloud_one_way_ms: float = 50.0
    eg_cloud_hops: int = 5
    dual_link_fraction: float = 0.3
    custom: dict | None = None  # explicit nodes/links/users layout


@dataclass(slots=True)
class ComputeConfig:
    slots_per_node: int = 8
    cloud_slots: int = 1_000_000


@dataclass(slots=True)
class ProfileConfig:
    ewma_alpha: float = 0.25
    prior_fraction: float = 0.5  # of the deadline, when no profile exists


@dataclass(slots=True)
class WorkloadConfig:
    load: str = "heavy"  # light | heavy | alternating
    users: int = 100
    services: int = 50
    duration_s: float = 60.0
    sensitive_deadline_ms: tuple = (10.0, 50.0)
    regular_deadline_ms: tuple = (50.0, 100.0)
    tolerant_deadline_ms: tuple = (100.0, 1000.0)
    exec_fraction_range: tuple = (0.4, 0.6)
    light_rate_hz: tuple = (2.0, 8.0)
    heavy_rate_hz: tuple = (10.0, 30.0)
    input_size_bytes: int = 512
    result_size_bytes: int = 512
    arrival: str = "poisson"  # poisson | uniform
    exec_draw: str = "per_service"  # per_service | per_task
    alternating_period_s: float = 10.0


@dataclass(slots=True)
class TaskConfig:
    inline_threshold_bytes: int = 1024
    duplicate_input_prob: float = 0.0


@dataclass(slots=True)
class PacketConfig:
    header_bytes: int = 64


@dataclass(slots=True)
class CsConfig:
    capacity: int = 1000
    freshness_ms: float = 1000.0


@dataclass(slots=True)
class NdnConfig:
    pit_margin_ms: float = 100.0


@dataclass(slots=True)
class SyncConfig:
    intra_period_ms: float = 1000.0
    inter_period_ms: float = 5000.0
    notify_threshold: float | None = None  # |util change| that forces a record
    record_base_bytes: int = 80
    per_profile_bytes: int = 24


@dataclass(slots=True)
class PolicyConfig:
    kind: str = "cledge"
    max_redirects: int = 3


@dataclass(slots=True)
class RunConfig:
    seed: int = 1
    probe_services: tuple = ("s00", "s34")
    reliability_window_s: float = 10.0
    dump_tasks: bool = False


@dataclass(slots=True)
class SimConfig:
    topology: TopologyConfig = field(default_factory=TopologyConfig)
    compute: ComputeConfig = field(default_factory=ComputeConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    workload: WorkloadConfig = field(default_factory=WorkloadConfig)
    task: TaskConfig = field(default_factory=TaskConfig)
    packet: PacketConfig = field(default_factory=PacketConfig)
    cs: CsConfig = field(default_factory=CsConfig)
    ndn: NdnConfig = field(default_factory=NdnConfig)
    sync: SyncConfig = field(default_factory=SyncConfig)
    policy: PolicyConfig = field(default_factory=PolicyConfig)
    run: RunConfig = field(default_factory=RunConfig)

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


_OPTIONAL_FLOAT = {"sync.notify_threshold"}
_OPTIONAL_DICT = {"topology.custom"}


def _coerce(path: str, current, value):
    if path in _OPTIONAL_DICT:
        if value is None or isinstance(value, dict):
            return value
        raise ConfigError(f"{path}: expected an object or null")
    if path in _OPTIONAL_FLOAT:
        if value is None:
            return None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number or null")
        return float(value)
    if isinstance(current, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{path}: expected true/false")
        return value
    if isinstance(current, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{path}: expected an integer")
        return value
    if isinstance(current, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{path}: expected a number")
        return float(value)
    if isinstance(current, str):
        if not isinstance(value, str):
            raise ConfigError(f"{path}: expected a string")
        return value
    if isinstance(current, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{path}: expected a list")
        items = list(value)
        if current and isinstance(current[0], str):
            if not all(isinstance(v, str) for v in items):
                raise ConfigError(f"{path}: expected a list of strings")
            return tuple(items)
        if len(current) == 2 and len(items) != 2:
            raise ConfigError(f"{path}: expected exactly two numbers")
        out = []
        for v in items:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ConfigError(f"{path}: expected a list of numbers")
            out.append(float(v))
        return tuple(out)
    raise ConfigError(f"{path}: unsupported value")


def _apply(obj, data: dict, prefix: str) -> None:
    names = {f.name for f in dataclasses.fields(obj)}
    for key, value in data.items():
        path = f"{prefix}{key}"
        if key not in names:
            raise ConfigError(f"unknown config key: {path}")
        current = getattr(obj, key)
        if dataclasses.is_dataclass(current):
            if not isinstance(value, dict):
                raise ConfigError(f"{path}: expected an object")
            _apply(current, value, path + ".")
        else:
            setattr(obj, key, _coerce(path, current, value))


def from_dict(data: dict) -> SimConfig:
    if not isinstance(data, dict):
        raise ConfigError("config root must be an object")
    cfg = SimConfig()
    _apply(cfg, data, "")
    validate(cfg)
    return cfg


def from_file(path: str) -> SimConfig:
    with open(path, "r", encoding="utf-8") as fh:
        try:
            data = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON ({exc})") from exc
    return from_dict(data)


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigError(f"{path}: {message}")


def validate(cfg: SimConfig) -> None:
    t, w = cfg.topology, cfg.workload
    _require(t.networks >= 1, "topology.networks", "must be >= 1")
    _require(t.ens_per_network >= 1, "topology.ens_per_network", "must be >= 1")
    _require(0.0 <= t.dual_link_fraction <= 1.0,
             "topology.dual_link_fraction", "must be in [0, 1]")
    for name in ("user_link_ms", "intra_one_way_ms", "eg_eg_one_way_ms",
                 "eg_cloud_one_way_ms"):
        _require(getattr(t, name) > 0, f"topology.{name}", "must be positive")
    for name in ("intra_hops", "eg_eg_hops", "eg_cloud_hops"):
        _require(getattr(t, name) >= 1, f"topology.{name}", "must be >= 1")

    _require(cfg.compute.slots_per_node >= 1, "compute.slots_per_node",
             "must be >= 1")
    _require(cfg.compute.cloud_slots >= 1, "compute.cloud_slots", "must be >= 1")
    _require(0.0 < cfg.profile.ewma_alpha <= 1.0,
             "profile.ewma_alpha", "must be in (0, 1]")
    _require(0.0 < cfg.profile.prior_fraction <= 1.0,
             "profile.prior_fraction", "must be in (0, 1]")

    _require(w.load in ("light", "heavy", "alternating"), "workload.load",
             "must be 'light', 'heavy', or 'alternating'")
    _require(w.users >= 1, "workload.users", "must be >= 1")
    _require(w.duration_s > 0, "workload.duration_s", "must be positive")
    _require(w.services >= 3, "workload.services",
             "must be >= 3 (one per deadline category)")
    for name in ("sensitive_deadline_ms", "regular_deadline_ms",
                 "tolerant_deadline_ms", "exec_fraction_range",
                 "light_rate_hz", "heavy_rate_hz"):
        lo, hi = getattr(w, name)
        _require(0 < lo <= hi, f"workload.{name}",
                 "must be an increasing positive pair")
    _require(w.arrival in ("poisson", "uniform"), "workload.arrival",
             "must be 'poisson' or 'uniform'")
    _require(w.exec_draw in ("per_service", "per_task"), "workload.exec_draw",
             "must be 'per_service' or 'per_task'")
    _require(w.input_size_bytes >= 1, "workload.input_size_bytes", "must be >= 1")
    _require(w.result_size_bytes >= 1, "workload.result_size_bytes", "must be >= 1")
    _require(w.alternating_period_s > 0, "workload.alternating_period_s",
             "must be positive")

    _require(cfg.task.inline_threshold_bytes >= 0,
             "task.inline_threshold_bytes", "must be >= 0")
    _require(0.0 <= cfg.task.duplicate_input_prob <= 1.0,
             "task.duplicate_input_prob", "must be in [0, 1]")

    _require(cfg.packet.header_bytes >= 0, "packet.header_bytes", "must be >= 0")
    _require(cfg.cs.capacity >= 0, "cs.capacity", "must be >= 0")
    _require(cfg.cs.freshness_ms >= 0, "cs.freshness_ms", "must be >= 0")
    _require(cfg.ndn.pit_margin_ms >= 0, "ndn.pit_margin_ms", "must be >= 0")

    _require(cfg.sync.intra_period_ms > 0, "sync.intra_period_ms",
             "must be positive")
    _require(cfg.sync.inter_period_ms > 0, "sync.inter_period_ms",
             "must be positive")
    if cfg.sync.notify_threshold is not None:
        _require(0.0 < cfg.sync.notify_threshold <= 1.0,
                 "sync.notify_threshold", "must be in (0, 1] or null")
    _require(cfg.sync.record_base_bytes >= 0, "sync.record_base_bytes",
             "must be >= 0")
    _require(cfg.sync.per_profile_bytes >= 0, "sync.per_profile_bytes",
             "must be >= 0")

    from .policy import POLICIES  # local import avoids a cycle

    _require(cfg.policy.kind in POLICIES, "policy.kind",
             f"must be one of {', '.join(POLICIES)}")
    _require(cfg.policy.max_redirects >= 0, "policy.max_redirects",
             "must be >= 0")

    _require(cfg.run.seed >= 0, "run.seed", "must be >= 0")
    _require(cfg.run.reliability_window_s > 0, "run.reliability_window_s",
             "must be positive")
