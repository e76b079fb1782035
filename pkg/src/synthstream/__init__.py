"""Streaming differentially private synthetic data in the unit hypercube.

At every time t the engine turns the first t stream points into t synthetic
points whose empirical measure is close to the true one in 1-Wasserstein
distance, under a fixed total privacy budget over the infinite horizon.
"""

from .counters import (
    BinaryCounter, ExactCounter, HybridCounter, InhomogeneousCounter,
    LedgerEntry, SparseCounter, StateError,
)
from .engine import (
    MODES, PrivacySchedule, SynthEngine, SyntheticDataset, budget_check,
    consistency, default_mode,
)
from .metrics import (
    LipschitzQuery, SizeCapError, default_queries, lipschitz_gap, w1_1d,
    w1_matching, w1_tree_bound,
)
from .noise import IntLaplace, NoiseControl, NoiseStream, sample_int_laplace_array
from .partition import DomainError, PartitionTree, Region, leaf_centers

__version__ = "0.1.0"

__all__ = [
    "IntLaplace", "NoiseControl", "NoiseStream", "sample_int_laplace_array",
    "DomainError", "PartitionTree", "Region", "leaf_centers",
    "BinaryCounter", "HybridCounter", "SparseCounter", "InhomogeneousCounter",
    "ExactCounter", "LedgerEntry", "StateError",
    "MODES", "PrivacySchedule", "SynthEngine", "SyntheticDataset",
    "budget_check", "consistency", "default_mode",
    "LipschitzQuery", "SizeCapError", "default_queries", "lipschitz_gap",
    "w1_1d", "w1_matching", "w1_tree_bound",
    "__version__",
]
