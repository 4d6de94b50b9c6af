"""Cluster-state simulation and entanglement certification toolkit."""

__version__ = "0.1.0"

from .errors import (
    ClusterLabError,
    EmptyLatticeError,
    InputError,
    ResourceLimitError,
    TargetMissError,
)
from .lattice import Cluster, OccupationSet, Path, decompose, find_path

__all__ = [
    "Cluster",
    "OccupationSet",
    "Path",
    "decompose",
    "find_path",
    "ClusterLabError",
    "EmptyLatticeError",
    "InputError",
    "ResourceLimitError",
    "TargetMissError",
    "__version__",
]
