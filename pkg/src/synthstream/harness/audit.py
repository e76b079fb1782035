"""Structural privacy audit on pairs of neighboring streams.

Two streams differing at exactly one time are run through identical-seed
engines while recording every counter's input stream.  The counters whose
inputs differ must be exactly the regions separating the two differing
points (truncated at the differing time's level in inhom-sparse mode, and
extending to the full current depth in replay-hybrid mode, where created
regions replay history).  The per-path budget charges must each stay at or
below eps/2.
"""

from __future__ import annotations

import numpy as np

from ..engine import SynthEngine, default_mode
from ..partition import PartitionTree

__all__ = ["neighbor_diff_index", "predicted_influence", "run_audit"]


def neighbor_diff_index(points_a: np.ndarray, points_b: np.ndarray) -> int:
    """0-based index of the single differing row; error if not neighbors."""
    a = np.asarray(points_a, dtype=float)
    b = np.asarray(points_b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"streams differ in shape: {a.shape} vs {b.shape}")
    diff = np.nonzero((a != b).any(axis=1))[0]
    if len(diff) != 1:
        raise ValueError(f"streams must differ in exactly 1 position, found {len(diff)}")
    return int(diff[0])


def predicted_influence(x_a, x_b, t_diff: int, mode: str, depth_end: int, dim: int) -> set[str]:
    """Regions whose indicator streams should differ for this neighbor pair."""
    if mode == "replay-hybrid":
        max_level = depth_end
    else:
        max_level = min(t_diff.bit_length() - 1, depth_end)
    tree = PartitionTree(dim)
    bits_a = tree._locate_bits(x_a, max_level)
    bits_b = tree._locate_bits(x_b, max_level)
    out = set()
    for j in range(1, max_level + 1):
        if bits_a[:j] != bits_b[:j]:
            out.add(bits_a[:j])
            out.add(bits_b[:j])
    return out


def run_audit(points_a, points_b, dim: int, epsilon: float,
              mode: str | None = None, seed: int = 0) -> dict:
    """Run both streams under a shared seed and compare counter inputs."""
    mode = default_mode(dim) if mode is None else mode
    points_a = np.asarray(points_a, dtype=float)
    points_b = np.asarray(points_b, dtype=float)
    idx = neighbor_diff_index(points_a, points_b)
    t_diff = idx + 1

    engines = []
    for pts in (points_a, points_b):
        eng = SynthEngine(dim, epsilon, mode=mode, seed=seed, record_inputs=True)
        for x in pts:
            eng.advance(x)
        eng.sync()
        engines.append(eng)
    eng_a, eng_b = engines

    sig_a = eng_a.input_signatures()
    sig_b = eng_b.input_signatures()
    observed = {bits for bits in sig_a if sig_a[bits] != sig_b[bits]}
    predicted = predicted_influence(
        points_a[idx], points_b[idx], t_diff, mode, eng_a.tree.depth, dim)

    charges = eng_a.charge_at(t_diff)
    path_a = set(eng_a.tree.locate_path(points_a[idx]))
    path_b = set(eng_b.tree.locate_path(points_b[idx]))
    total_a = sum(charges[bits] for bits in observed & path_a)
    total_b = sum(charges[bits] for bits in observed & path_b)
    total = sum(charges[bits] for bits in observed)
    bound = epsilon / 2.0
    return {
        "t_diff": t_diff,
        "depth": eng_a.tree.depth,
        "mode": mode,
        "epsilon": epsilon,
        "influenced": sorted(observed),
        "predicted": sorted(predicted),
        "influence_matches": observed == predicted,
        "path_a_epsilon": total_a,
        "path_b_epsilon": total_b,
        "total_epsilon": total,
        "path_bound": bound,
        "ok": (observed == predicted
               and total_a <= bound + 1e-12
               and total_b <= bound + 1e-12
               and total <= epsilon + 1e-12),
    }
