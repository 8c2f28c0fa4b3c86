"""Deterministic simulator of deadline-aware task offloading over an
information-centric (NDN-style) cloud-edge network.

Quick start::

    from cledgesim import SimConfig, run_simulation

    cfg = SimConfig()
    cfg.workload.duration_s = 10.0
    report, tasks = run_simulation(cfg)
    print(report.satisfaction, report.location_fractions)
"""
from .config import ConfigError, SimConfig, from_dict, from_file, validate
from .engine import RandomStreams, Scheduler, derive_seed
from .metrics import MetricsReport
from .policy import POLICIES
from .simulation import Simulation, run_simulation
from .topology import Topology, build_topology

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "MetricsReport",
    "POLICIES",
    "RandomStreams",
    "Scheduler",
    "SimConfig",
    "Simulation",
    "Topology",
    "build_topology",
    "derive_seed",
    "from_dict",
    "from_file",
    "run_simulation",
    "validate",
    "__version__",
]
