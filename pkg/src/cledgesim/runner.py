"""Experiment runner: seeds, sweep points, CSV rows, JSON summary.

A *point* is one fully resolved configuration (policy, load, any swept
parameter values); each point runs `runs` times with independently derived
seeds. Every run appends one CSV row; every point appends one aggregate
(mean) row and one summary.json entry carrying mean and SD across seeds.

Seed derivation: a single plain run uses the configured seed as-is, so a
row can be reproduced directly with --seed. Multi-run and sweep executions
derive each run's seed as blake2b(base_seed, "<point label>#<index>"),
making every point's randomness independent of every other's.
"""
from __future__ import annotations

import copy
import csv
import json
import statistics
from dataclasses import dataclass
from pathlib import Path

from .config import ConfigError, SimConfig, _apply, validate
from .engine import derive_seed, us_to_ms
from .metrics import LOC_CLOUD, LOC_CROSS, LOC_HOME, MetricsReport
from .simulation import run_simulation
from .workload import CAT_REGULAR, CAT_SENSITIVE, CAT_TOLERANT, Task

BASE_FIELDS = [
    "run_id", "seed", "policy", "load", "sync_x_s", "sync_y_s",
    "satisfaction", "overhead", "lat_overall_ms", "lat_sensitive_ms",
    "lat_regular_ms", "lat_tolerant_ms", "frac_home", "frac_cross",
    "frac_cloud",
]

TASK_FIELDS = [
    "task_id", "user", "service", "category", "created_ms", "deadline_ms",
    "completed_ms", "latency_ms", "outcome", "location", "executed_at",
    "redirects",
]


@dataclass(slots=True)
class RunResult:
    run_id: str
    seed: int
    policy: str
    load: str
    sync_x_s: float
    sync_y_s: float
    report: MetricsReport
    tasks: list[Task]


@dataclass(slots=True)
class PointResult:
    label: str
    policy: str
    load: str
    sync_x_s: float
    sync_y_s: float
    runs: list[RunResult]


def csv_fields(probe_services: tuple[str, ...]) -> list[str]:
    return BASE_FIELDS + [f"sd_{svc}_ms" for svc in probe_services]


def metric_values(report: MetricsReport,
                  probe_services: tuple[str, ...]) -> dict[str, float | None]:
    """The numeric CSV columns for one run (None -> empty cell)."""
    lat = report.latency_ms
    values: dict[str, float | None] = {
        "satisfaction": report.satisfaction,
        "overhead": report.overhead,
        "lat_overall_ms": report.latency_overall_ms,
        "lat_sensitive_ms": lat.get(CAT_SENSITIVE),
        "lat_regular_ms": lat.get(CAT_REGULAR),
        "lat_tolerant_ms": lat.get(CAT_TOLERANT),
        "frac_home": report.location_fractions[LOC_HOME],
        "frac_cross": report.location_fractions[LOC_CROSS],
        "frac_cloud": report.location_fractions[LOC_CLOUD],
    }
    for svc in probe_services:
        values[f"sd_{svc}_ms"] = report.reliability_sd_ms.get(svc)
    return values


def apply_overrides(cfg: SimConfig, overrides: dict) -> None:
    """Apply {dotted.path: value} overrides with full config validation."""
    for path, value in overrides.items():
        parts = path.split(".")
        nested: dict = {parts[-1]: value}
        for part in reversed(parts[:-1]):
            nested = {part: nested}
        _apply(cfg, nested, "")
    validate(cfg)


def point_label(policy: str, load: str, params: dict) -> str:
    bits = [f"policy={policy}", f"load={load}"]
    bits += [f"{k}={params[k]}" for k in sorted(params)]
    return "|".join(bits)


def sweep_points(base: SimConfig, spec: dict) -> list[tuple[str, dict]]:
    """Expand a sweep spec into (label, overrides) points.

    Spec keys: "parameters" ({dotted path: [values]}), "policies" (list),
    "loads" (list), "mode" ("product" | "zip"). Policies and loads default
    to the base config's. Zip mode pairs the parameter lists positionally
    (they must share a length); product mode crosses everything.
    """
    allowed = {"parameters", "policies", "loads", "mode"}
    unknown = set(spec) - allowed
    if unknown:
        raise ConfigError(f"unknown sweep key: {sorted(unknown)[0]}")
    params: dict = spec.get("parameters", {})
    if not isinstance(params, dict):
        raise ConfigError("sweep parameters must be an object of value lists")
    for path, values in params.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep parameter {path}: expected a non-empty list")
    policies = spec.get("policies", [base.policy.kind])
    loads = spec.get("loads", [base.workload.load])
    mode = spec.get("mode", "product")
    if mode not in ("product", "zip"):
        raise ConfigError("sweep mode must be 'product' or 'zip'")

    paths = sorted(params)
    combos: list[dict]
    if not paths:
        combos = [{}]
    elif mode == "zip":
        lengths = {len(params[p]) for p in paths}
        if len(lengths) != 1:
            raise ConfigError("zip sweep requires equal-length value lists")
        combos = [
            {p: params[p][i] for p in paths}
            for i in range(lengths.pop())
        ]
    else:
        combos = [{}]
        for p in paths:
            combos = [dict(c, **{p: v}) for c in combos for v in params[p]]

    points = []
    for policy in policies:
        for load in loads:
            for combo in combos:
                overrides = dict(combo)
                overrides["policy.kind"] = policy
                overrides["workload.load"] = load
                points.append((point_label(policy, load, combo), overrides))
    return points


def run_point(base: SimConfig, label: str, overrides: dict, runs: int,
              run_id_start: int, derive: bool) -> PointResult:
    cfg0 = copy.deepcopy(base)
    apply_overrides(cfg0, overrides)
    results = []
    for i in range(runs):
        cfg = copy.deepcopy(cfg0)
        if derive or runs > 1:
            cfg.run.seed = derive_seed(base.run.seed, f"{label}#{i}")
        report, tasks = run_simulation(cfg)
        results.append(RunResult(
            run_id=f"r{run_id_start + i:04d}",
            seed=cfg.run.seed,
            policy=cfg.policy.kind,
            load=cfg.workload.load,
            sync_x_s=cfg.sync.intra_period_ms / 1000.0,
            sync_y_s=cfg.sync.inter_period_ms / 1000.0,
            report=report,
            tasks=tasks,
        ))
    first = results[0]
    return PointResult(label, first.policy, first.load, first.sync_x_s,
                       first.sync_y_s, results)


def run_experiment(base: SimConfig, runs: int,
                   sweep: dict | None = None) -> list[PointResult]:
    if sweep is None:
        points = [(point_label(base.policy.kind, base.workload.load, {}), {})]
        derive = False
    else:
        points = sweep_points(base, sweep)
        derive = True
    out = []
    next_id = 0
    for label, overrides in points:
        point = run_point(base, label, overrides, runs, next_id, derive)
        next_id += len(point.runs)
        out.append(point)
    return out


# ----------------------------------------------------------------- output


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return str(value)  # shortest round-trip repr
    return str(value)


def _aggregate(values: list[float | None]) -> tuple[float | None, float | None]:
    present = [v for v in values if v is not None]
    if not present:
        return None, None
    mean = sum(present) / len(present)
    sd = statistics.pstdev(present) if len(present) > 1 else 0.0
    return mean, sd


def write_outputs(points: list[PointResult], out_dir: str,
                  base: SimConfig, sweep: dict | None,
                  dump_tasks: bool) -> dict:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    probes = tuple(base.run.probe_services)
    fields = csv_fields(probes)

    rows = []
    summary_points = []
    for p_index, point in enumerate(points):
        per_run = []
        for run in point.runs:
            values = metric_values(run.report, probes)
            per_run.append(values)
            row = {
                "run_id": run.run_id,
                "seed": run.seed,
                "policy": run.policy,
                "load": run.load,
                "sync_x_s": run.sync_x_s,
                "sync_y_s": run.sync_y_s,
            }
            row.update(values)
            rows.append(row)
        keys = [f for f in fields if f not in
                ("run_id", "seed", "policy", "load", "sync_x_s", "sync_y_s")]
        means: dict[str, float | None] = {}
        sds: dict[str, float | None] = {}
        for key in keys:
            means[key], sds[key] = _aggregate([v[key] for v in per_run])
        agg_row = {
            "run_id": f"agg{p_index:03d}",
            "seed": "",
            "policy": point.policy,
            "load": point.load,
            "sync_x_s": point.sync_x_s,
            "sync_y_s": point.sync_y_s,
        }
        agg_row.update(means)
        rows.append(agg_row)
        summary_points.append({
            "label": point.label,
            "policy": point.policy,
            "load": point.load,
            "sync_x_s": point.sync_x_s,
            "sync_y_s": point.sync_y_s,
            "runs": len(point.runs),
            "seeds": [r.seed for r in point.runs],
            "mean": means,
            "sd": sds,
            "totals": {
                "generated": sum(r.report.generated for r in point.runs),
                "on_time": sum(r.report.on_time for r in point.runs),
                "late": sum(r.report.late for r in point.runs),
                "dropped": sum(r.report.dropped for r in point.runs),
            },
        })

    with (out / "runs.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=fields)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: _fmt(row.get(k)) for k in fields})

    summary = {
        "config": base.to_dict(),
        "sweep": sweep,
        "points": summary_points,
    }
    with (out / "summary.json").open("w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")

    if dump_tasks:
        for point in points:
            for run in point.runs:
                _write_tasks(out / f"tasks_{run.run_id}.csv", run.tasks)
    return summary


def _write_tasks(path: Path, tasks: list[Task]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=TASK_FIELDS)
        writer.writeheader()
        for t in sorted(tasks, key=lambda t: t.task_id):
            completed = (us_to_ms(t.completed_at_us)
                         if t.completed_at_us >= 0 else None)
            latency = (us_to_ms(t.completed_at_us - t.created_at_us)
                       if t.completed_at_us >= 0 else None)
            writer.writerow({
                "task_id": t.task_id,
                "user": t.user_id,
                "service": t.service,
                "category": t.category,
                "created_ms": _fmt(us_to_ms(t.created_at_us)),
                "deadline_ms": _fmt(us_to_ms(t.deadline_us)),
                "completed_ms": _fmt(completed),
                "latency_ms": _fmt(latency),
                "outcome": t.outcome,
                "location": t.location or "",
                "executed_at": t.executed_at or "",
                "redirects": t.redirects,
            })
