"""Experiment driver: workloads, strategy benchmarks, optimisation comparisons."""

from .config import ConfigError, ExperimentConfig, TopologySpec, from_dict, load_config
from .workload import Workload, WorkloadParams, generate_workload

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "TopologySpec",
    "Workload",
    "WorkloadParams",
    "from_dict",
    "generate_workload",
    "load_config",
]
