"""Online private synthetic data pipeline.

Each step consumes one point of a stream in [0,1]^d and can emit a synthetic
dataset of the same size whose empirical measure stays close to the true
one.  The pipeline: grow the binary partition at powers of two, feed every
live region's private counter the indicator of the new point, post-process
the noisy counts into a nonnegative consistent tree, and place each leaf's
count at the leaf center.

Two modes:

* ``inhom-sparse`` (d >= 2): each region created at level j runs an
  inhomogeneous sparse counter with starting level j and the geometric
  budget schedule eps_{j,r}; a region's counter never sees items from
  before its creation time 2**j.
* ``replay-hybrid`` (any d; default for d = 1): each region runs a hybrid
  counter with budget (3/pi^2) * eps / (level+1)**2, fed the full replayed
  indicator history at creation.

Feeding is lazy: only the regions containing the new point are touched per
step, and all other counters are fast-forwarded over their pending zero
runs on demand, so processing a stream of length t costs O(dt + t log t)
overall when outputs are materialized at power-of-two checkpoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .counters import HybridCounter, InhomogeneousCounter, StateError
from .noise import NoiseControl, NoiseStream
from .partition import PartitionTree, leaf_centers, region_diameter

__all__ = [
    "MODES",
    "default_mode",
    "PrivacySchedule",
    "budget_check",
    "consistency",
    "SyntheticDataset",
    "SynthEngine",
]

MODES = ("inhom-sparse", "replay-hybrid")

_CHILD_REGION = 1


def default_mode(dim: int) -> str:
    return "replay-hybrid" if dim == 1 else "inhom-sparse"


@dataclass(frozen=True)
class PrivacySchedule:
    """Per-region privacy budgets against a total budget ``epsilon``.

    inhom-sparse: eps_{j,r} = C1 * eps * 2**((j-r)(1-1/d)/2) for a level-j
    region at time level r, with C1 = (1 - 2**(-(1-1/d)/2)) / 2, so the
    levels along any root path sum below eps/2.  Degenerate (all zero) at
    d = 1, where the engine refuses the mode.

    replay-hybrid: eps_j = (3/pi^2) * eps / (j+1)**2 per region level j;
    the full series over j >= 0 sums to exactly eps/2.
    """

    epsilon: float
    mode: str
    dim: int

    def __post_init__(self) -> None:
        if not self.epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {self.epsilon}")
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if self.dim < 1:
            raise ValueError(f"dimension must be >= 1, got {self.dim}")

    @property
    def alpha(self) -> float:
        return 2.0 ** ((1.0 - 1.0 / self.dim) / 2.0)

    @property
    def c1(self) -> float:
        return (1.0 - 1.0 / self.alpha) / 2.0

    def level_epsilon(self, j: int, r: int) -> float:
        """inhom-sparse budget for a level-j region during time level r."""
        return self.c1 * self.epsilon * self.alpha ** (j - r)

    def region_epsilon(self, level: int) -> float:
        """replay-hybrid budget for a region at the given level."""
        return (3.0 / math.pi ** 2) * self.epsilon / (level + 1) ** 2


def budget_check(schedule: PrivacySchedule, s_max: int) -> dict:
    """Verify the partial-sum budget bound for all depths s <= s_max.

    Returns the partial sums, the worst ratio against eps/2, and (for
    replay-hybrid) the closed-form value of the infinite series.
    """
    if s_max < 1:
        raise ValueError(f"s_max must be >= 1, got {s_max}")
    bound = schedule.epsilon / 2.0
    partials = []
    if schedule.mode == "inhom-sparse":
        for s in range(1, s_max + 1):
            partials.append(sum(schedule.level_epsilon(j, s) for j in range(1, s + 1)))
    else:
        running = 0.0
        for s in range(0, s_max + 1):
            running += schedule.region_epsilon(s)
            partials.append(running)
    max_partial = max(partials)
    report = {
        "mode": schedule.mode,
        "dim": schedule.dim,
        "epsilon": schedule.epsilon,
        "s_max": s_max,
        "partial_sums": partials,
        "max_partial": max_partial,
        "bound": bound,
        "max_ratio": max_partial / bound,
        "ok": max_partial <= bound + 1e-12,
    }
    if schedule.mode == "replay-hybrid":
        report["infinite_sum"] = (3.0 / math.pi ** 2) * schedule.epsilon * (math.pi ** 2 / 6.0)
    return report


def _redistribute(m: int, a: int, b: int) -> tuple[int, int]:
    """Split m between clamped child counts a, b; both deltas share a sign.

    Surplus goes mostly to the smaller child (ties favor child 0); a
    deficit is taken from the larger child first (ties from child 0).
    """
    surplus = m - a - b
    if surplus >= 0:
        give0 = (surplus + 1) // 2 if a <= b else surplus // 2
        return a + give0, b + (surplus - give0)
    need = -surplus
    if a >= b:
        take0 = min(need, a)
        return a - take0, b - (need - take0)
    take1 = min(need, b)
    return a - (need - take1), b - take1


def consistency(noisy: dict, t: int, depth: int) -> dict:
    """Top-down pass turning noisy counts into a nonnegative consistent tree.

    The root count is the public stream length t.  At every internal node
    the children are clamped at zero and then adjusted so they sum to the
    parent, with both adjustments sharing a sign relative to the clamped
    values.
    """
    m = {"": t}
    for j in range(depth):
        width = 1 << j
        for i in range(width):
            parent = format(i, f"0{j}b") if j else ""
            a = max(noisy.get(parent + "0", 0), 0)
            b = max(noisy.get(parent + "1", 0), 0)
            m0, m1 = _redistribute(m[parent], a, b)
            m[parent + "0"] = m0
            m[parent + "1"] = m1
    return m


@dataclass
class SyntheticDataset:
    """The t synthetic points emitted at time t."""

    t: int
    points: np.ndarray  # shape (t, d)

    def __post_init__(self) -> None:
        self.points = np.asarray(self.points, dtype=float)
        if self.points.ndim != 2 or self.points.shape[0] != self.t:
            raise ValueError(f"expected {self.t} points, got shape {self.points.shape}")


class SynthEngine:
    """One engine instance per stream; ``step`` calls are strictly sequential.

    ``noise_off`` replaces the perturbation step with exact counts (the
    pipeline oracle used by tests); counter mechanics keep their own
    noise-off behavior in the counters module.
    """

    def __init__(self, dim: int, epsilon: float, mode: str | None = None,
                 seed: int = 0, noise_off: bool = False,
                 record_inputs: bool = False, stale_sum_mode: str = "replace"):
        mode = default_mode(dim) if mode is None else mode
        self.schedule = PrivacySchedule(epsilon, mode, dim)
        if mode == "inhom-sparse" and dim < 2:
            raise ValueError(
                "inhom-sparse budgets are degenerate at d=1; use replay-hybrid")
        self.dim = dim
        self.epsilon = epsilon
        self.mode = mode
        self.seed = seed
        self.noise_off = noise_off
        self.tree = PartitionTree(dim)
        self.t = 0
        self.counters: dict[str, object] = {}
        self._control = NoiseControl(disabled=noise_off)
        self._noise = NoiseStream(seed, control=self._control)
        self._stale_sum_mode = stale_sum_mode
        self._history: list[tuple[float, ...]] | None = (
            [] if mode == "replay-hybrid" else None)
        self._record = record_inputs
        self._ones: dict[str, list[int]] = {}

    # -- stream ingestion ------------------------------------------------

    def step(self, x) -> SyntheticDataset:
        """Consume one point and emit the full synthetic dataset."""
        self.advance(x)
        return self.emit()

    def advance(self, x) -> None:
        """Consume one point without materializing an output."""
        x = tuple(float(v) for v in x)
        self.tree._check_point(x)  # reject before any state change
        t = self.t + 1
        if t > 1 and t & (t - 1) == 0:
            self._refine_to(t.bit_length() - 1, t)
        self.t = t
        path = self.tree.add_point(x)
        if self._history is not None:
            self._history.append(x)
        if self.noise_off:
            return
        for bits in path:
            self._feed_one(bits, t)

    def _feed_one(self, bits: str, t: int) -> None:
        counter = self.counters[bits]
        gap = t - 1 - counter.time
        if gap:
            counter.advance_zeros(gap)
        counter.feed(1)
        if self._record:
            self._ones.setdefault(bits, []).append(t)

    def _refine_to(self, level: int, t_now: int) -> None:
        while self.tree.depth < level:
            new_regions = self.tree.refine()
            lvl = self.tree.depth
            if self.noise_off:
                continue
            if self.mode == "inhom-sparse":
                for i, bits in enumerate(new_regions):
                    self.counters[bits] = InhomogeneousCounter(
                        lvl,
                        lambda r, j=lvl: self.schedule.level_epsilon(j, r),
                        self._noise.child(_CHILD_REGION, lvl, i),
                        start_time=1 << lvl,
                        stale_sum_mode=self._stale_sum_mode,
                    )
            else:
                for i, bits in enumerate(new_regions):
                    self.counters[bits] = HybridCounter(
                        self.schedule.region_epsilon(lvl),
                        self._noise.child(_CHILD_REGION, lvl, i),
                    )
                self._replay_history(lvl, t_now)

    def _replay_history(self, lvl: int, t_now: int) -> None:
        # feed every new region the indicator stream for times 1..t_now-1
        for s, point in enumerate(self._history, start=1):
            bits = self.tree._locate_bits(point, lvl)
            self._feed_one(bits, s)
        for bits in self.tree.regions_at(lvl):
            counter = self.counters[bits]
            gap = t_now - 1 - counter.time
            if gap:
                counter.advance_zeros(gap)

    # -- outputs -----------------------------------------------------------

    def sync(self) -> None:
        """Fast-forward every counter over its pending zero run."""
        if self.noise_off:
            return
        t = self.t
        for counter in self.counters.values():
            gap = t - counter.time
            if gap:
                counter.advance_zeros(gap)

    def noisy_counts(self) -> dict[str, int]:
        """Current private count per region (levels 1..depth)."""
        if self.noise_off:
            return {
                bits: self.tree.true_count(bits)
                for level in range(1, self.tree.depth + 1)
                for bits in self.tree.regions_at(level)
            }
        self.sync()
        return {bits: counter.output() for bits, counter in self.counters.items()}

    def consistent_counts(self) -> dict[str, int]:
        return consistency(self.noisy_counts(), self.t, self.tree.depth)

    def emit(self) -> SyntheticDataset:
        """Synthetic dataset for the current time: leaf counts at leaf centers."""
        counts = self.consistent_counts()
        depth = self.tree.depth
        leaf_counts = np.fromiter(
            (counts.get(bits, 0) for bits in self.tree.regions_at(depth)),
            dtype=np.int64, count=1 << depth)
        if int(leaf_counts.sum()) != self.t:
            raise StateError(f"leaf counts sum to {leaf_counts.sum()}, expected {self.t}")
        pts = np.repeat(leaf_centers(depth, self.dim), leaf_counts, axis=0)
        return SyntheticDataset(self.t, pts)

    # -- introspection -----------------------------------------------------

    def input_signatures(self) -> dict[str, tuple[int, ...]]:
        """Per-region one-times of the fed indicator streams (audit use)."""
        if not self._record:
            raise StateError("engine was not created with record_inputs=True")
        return {bits: tuple(self._ones.get(bits, ())) for bits in self.counters}

    def charge_at(self, t_diff: int) -> dict[str, float]:
        """Privacy charge each region's counter incurs for a point at t_diff."""
        return {bits: c.charge_at(t_diff) for bits, c in self.counters.items()}

    def snapshot(self) -> dict:
        """JSON-ready state summary."""
        counts = self.consistent_counts()
        return {
            "time": self.t,
            "depth": self.tree.depth,
            "dim": self.dim,
            "mode": self.mode,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "noise_off": self.noise_off,
            "max_leaf_diameter": region_diameter(self.tree.depth, self.dim),
            "consistent_counts": counts,
            "charge_now": {} if self.noise_off else self.charge_at(max(self.t, 1)),
        }
