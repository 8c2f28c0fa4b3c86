"""Command-line experiment runner.

    cledge-sim --config configs/default.json --runs 10 --out results/
    cledge-sim --policy cloud-only --load heavy --seed 7 --out /tmp/x
    cledge-sim --sweep sweeps/sync.json --runs 5 --out results/sweep

Flags override config keys. Exit code 0 means every run completed and all
output files were written; a config problem exits 2 with the first
violation named.
"""
from __future__ import annotations

import argparse
import json
import sys

from .config import ConfigError, SimConfig, from_file, validate
from .policy import POLICIES
from .runner import run_experiment, write_outputs

PAPER_SCALE_DURATION_S = 250.0  # heavy load: ~500k tasks per run


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cledge-sim",
        description="Deterministic simulator of deadline-aware task "
                    "offloading over an information-centric cloud-edge "
                    "network.",
    )
    parser.add_argument("--config", metavar="PATH",
                        help="JSON config file (defaults used when omitted)")
    parser.add_argument("--policy", choices=POLICIES,
                        help="placement policy (overrides policy.kind)")
    parser.add_argument("--load", choices=("light", "heavy", "alternating"),
                        help="load profile (overrides workload.load)")
    parser.add_argument("--seed", type=int, metavar="N",
                        help="base RNG seed (overrides run.seed)")
    parser.add_argument("--runs", type=int, default=1, metavar="K",
                        help="runs per point with derived seeds (default 1)")
    parser.add_argument("--duration-s", type=float, metavar="D",
                        help="simulated seconds (overrides workload.duration_s)")
    parser.add_argument("--sync-intra", type=float, metavar="MS",
                        help="tier-1 sync period in ms")
    parser.add_argument("--sync-inter", type=float, metavar="MS",
                        help="tier-2 sync period in ms")
    parser.add_argument("--sweep", metavar="PATH",
                        help="JSON sweep spec (parameters/policies/loads)")
    parser.add_argument("--out", default="out", metavar="DIR",
                        help="output directory (default ./out)")
    parser.add_argument("--dump-tasks", action="store_true",
                        help="also write per-task CSV per run")
    parser.add_argument("--paper-scale", action="store_true",
                        help=f"full-scale duration "
                             f"({PAPER_SCALE_DURATION_S:.0f} s, ~500k tasks "
                             f"per heavy run)")
    return parser


def _load_config(args: argparse.Namespace) -> SimConfig:
    cfg = from_file(args.config) if args.config else SimConfig()
    if args.policy is not None:
        cfg.policy.kind = args.policy
    if args.load is not None:
        cfg.workload.load = args.load
    if args.seed is not None:
        cfg.run.seed = args.seed
    if args.duration_s is not None:
        cfg.workload.duration_s = args.duration_s
    if args.paper_scale:
        cfg.workload.duration_s = PAPER_SCALE_DURATION_S
    if args.sync_intra is not None:
        cfg.sync.intra_period_ms = args.sync_intra
    if args.sync_inter is not None:
        cfg.sync.inter_period_ms = args.sync_inter
    if args.dump_tasks:
        cfg.run.dump_tasks = True
    validate(cfg)
    return cfg


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args)
        if args.runs < 1:
            raise ConfigError("--runs: must be >= 1")
        sweep = None
        if args.sweep:
            with open(args.sweep, "r", encoding="utf-8") as fh:
                try:
                    sweep = json.load(fh)
                except json.JSONDecodeError as exc:
                    raise ConfigError(
                        f"{args.sweep}: invalid JSON ({exc})"
                    ) from exc
            if not isinstance(sweep, dict):
                raise ConfigError(f"{args.sweep}: sweep spec must be an object")
        points = run_experiment(cfg, args.runs, sweep)
        write_outputs(points, args.out, cfg, sweep,
                      cfg.run.dump_tasks)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    for point in points:
        n = len(point.runs)
        sat = sum(r.report.satisfaction for r in point.runs) / n
        ovh = sum(r.report.overhead for r in point.runs) / n
        print(f"{point.label}: runs={n} satisfaction={sat:.4f} "
              f"overhead={ovh:.3f}")
    print(f"wrote {args.out}/runs.csv and {args.out}/summary.json")
    return 0


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
