"""Utility evaluation for synthetic datasets.

Exact 1-Wasserstein distance between equal-weight empirical measures on
[0,1]^d under the l-infinity ground metric: a sorted-coupling formula in
one dimension, an exact min-cost assignment for small instances in any
dimension, the hierarchical tree upper bound evaluated from per-region
counts, and the largest gap over a family of 1-Lipschitz test queries
(always a lower bound on W1 by duality).
"""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .partition import region_diameter

__all__ = [
    "SizeCapError",
    "MATCHING_SIZE_CAP",
    "w1_1d",
    "w1_matching",
    "w1_tree_bound",
    "LipschitzQuery",
    "default_queries",
    "lipschitz_gap",
]

MATCHING_SIZE_CAP = 2048


class SizeCapError(ValueError):
    """Instance too large for the exact matching oracle."""


def _as_points(x, name: str) -> np.ndarray:
    pts = np.asarray(x, dtype=float)
    if pts.ndim == 1:
        pts = pts[:, None]
    if pts.ndim != 2 or pts.shape[0] < 1:
        raise ValueError(f"{name} must be a nonempty (n, d) array")
    return pts


def w1_1d(x, y) -> float:
    """Exact W1 between two 1-D empirical measures.

    Equal sizes reduce to the mean absolute difference of the sorted
    samples (the optimal coupling in one dimension); unequal sizes use the
    quantile coupling, integrating |F^-1 - G^-1| between breakpoints.
    """
    xs = np.sort(np.asarray(x, dtype=float).ravel())
    ys = np.sort(np.asarray(y, dtype=float).ravel())
    n, m = len(xs), len(ys)
    if n < 1 or m < 1:
        raise ValueError("empirical measures need at least one point")
    if n == m:
        return float(np.abs(xs - ys).mean())
    breaks = np.union1d(np.arange(1, n + 1) / n, np.arange(1, m + 1) / m)
    total = 0.0
    prev = 0.0
    for u in breaks:
        mid = 0.5 * (prev + u)
        total += abs(xs[int(mid * n)] - ys[int(mid * m)]) * (u - prev)
        prev = u
    return total


def w1_matching(x, y, size_cap: int = MATCHING_SIZE_CAP) -> float:
    """Exact W1 via min-cost perfect matching under l-infinity cost."""
    xp = _as_points(x, "x")
    yp = _as_points(y, "y")
    if xp.shape != yp.shape:
        raise ValueError(f"equal sizes required, got {xp.shape} vs {yp.shape}")
    n = xp.shape[0]
    if n > size_cap:
        raise SizeCapError(
            f"matching oracle capped at n={size_cap} (got {n}); "
            "use w1_tree_bound for larger instances")
    cost = np.abs(xp[:, None, :] - yp[None, :, :]).max(axis=2)
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].sum() / n)


def w1_tree_bound(true_counts: dict, synth_counts: dict, depth: int, dim: int) -> float:
    """Hierarchical W1 upper bound from per-region count discrepancies.

    With lambda_theta = synthetic minus true count, the bound is
    (1/t) * sum over internal nodes of max(|lambda_child0|, |lambda_child1|)
    times the parent diameter, plus the maximal leaf diameter.
    """
    t = synth_counts.get("")
    if t is None:
        raise ValueError("synth_counts must include the root count")
    delta = region_diameter(depth, dim)
    if t == 0:
        return delta
    total = 0.0
    for j in range(depth):
        diam = region_diameter(j, dim)
        for i in range(1 << j):
            parent = format(i, f"0{j}b") if j else ""
            lam0 = synth_counts.get(parent + "0", 0) - true_counts.get(parent + "0", 0)
            lam1 = synth_counts.get(parent + "1", 0) - true_counts.get(parent + "1", 0)
            total += max(abs(lam0), abs(lam1)) * diam
    return total / t + delta


class LipschitzQuery:
    """A named test function, 1-Lipschitz under the l-infinity metric."""

    def __init__(self, name: str, fn):
        self.name = name
        self._fn = fn

    def __call__(self, points: np.ndarray) -> np.ndarray:
        return self._fn(np.asarray(points, dtype=float))

    def __repr__(self) -> str:
        return f"LipschitzQuery({self.name!r})"


def default_queries(dim: int, seed: int = 0, anchors: int = 3, affine: int = 3) -> list[LipschitzQuery]:
    """Built-in query family: coordinate projections, distances to random
    anchors, and minima of affine functions with unit l1 weight norm."""
    rng = np.random.default_rng(seed)
    queries = [
        LipschitzQuery(f"proj_{a}", lambda p, a=a: p[:, a]) for a in range(dim)
    ]
    for i in range(anchors):
        anchor = rng.random(dim)
        queries.append(LipschitzQuery(
            f"dist_anchor_{i}",
            lambda p, a=anchor: np.abs(p - a).max(axis=1)))
    for i in range(affine):
        b = rng.random(3)
        # rows have l1 norm <= 1, so each affine piece is 1-Lipschitz in l-inf
        mats = rng.random((3, dim)) * rng.choice([-1.0, 1.0], size=(3, dim))
        mats /= np.maximum(np.abs(mats).sum(axis=1, keepdims=True), 1.0)
        queries.append(LipschitzQuery(
            f"min_affine_{i}",
            lambda p, m=mats, b=b: (p @ m.T + b).min(axis=1)))
    return queries


def lipschitz_gap(x, y, queries: list[LipschitzQuery]) -> float:
    """Largest mean-query gap over the family; <= W1 by duality."""
    if not queries:
        raise ValueError("query list must be nonempty")
    xp = _as_points(x, "x")
    yp = _as_points(y, "y")
    gap = 0.0
    for q in queries:
        gap = max(gap, abs(float(q(xp).mean()) - float(q(yp).mean())))
    return gap
