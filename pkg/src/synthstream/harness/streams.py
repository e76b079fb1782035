"""Seeded point-stream generators for benchmarks and audits."""

from __future__ import annotations

import numpy as np

__all__ = ["STREAM_KINDS", "make_stream"]

STREAM_KINDS = ("uniform", "clustered", "sparse-corner")


def make_stream(kind: str, dim: int, length: int, seed: int,
                centers: int = 8, spread: float = 0.05,
                corner_p: float = 0.9) -> np.ndarray:
    """Generate a (length, dim) stream of points in [0,1]^d."""
    rng = np.random.default_rng(seed)
    if kind == "uniform":
        return rng.random((length, dim))
    if kind == "clustered":
        locs = rng.random((centers, dim))
        picks = rng.integers(0, centers, size=length)
        pts = locs[picks] + rng.uniform(-spread, spread, size=(length, dim))
        return np.clip(pts, 0.0, 1.0)
    if kind == "sparse-corner":
        pts = rng.random((length, dim))
        in_corner = rng.random(length) < corner_p
        pts[in_corner] *= 0.1
        return pts
    raise ValueError(f"unknown stream kind {kind!r}; expected one of {STREAM_KINDS}")
