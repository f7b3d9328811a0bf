"""Routing-led VNF placement in datacentre networks."""

from ._kernels import BACKEND
from .encoding import Instance, ServiceChain, decode, make_representation
from .metrics import hypervolume, rank_sum_test
from .moea import RunConfig, run
from .objectives import ModelParams, ObjectiveVector, evaluate
from .routing import build_condensed_tables, enumerate_paths
from .selection import CapacityState, make_strategy
from .topology import (
    NetworkGraph,
    build_dcell,
    build_fat_tree,
    build_leaf_spine,
    build_spanning_tree,
    build_topology,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "CapacityState",
    "Instance",
    "ModelParams",
    "NetworkGraph",
    "ObjectiveVector",
    "RunConfig",
    "ServiceChain",
    "build_condensed_tables",
    "build_dcell",
    "build_fat_tree",
    "build_leaf_spine",
    "build_spanning_tree",
    "build_topology",
    "decode",
    "enumerate_paths",
    "evaluate",
    "hypervolume",
    "make_representation",
    "make_strategy",
    "rank_sum_test",
    "run",
]
