"""Online private counting mechanisms over integer increment streams.

Four mechanisms share one streaming contract:

* ``feed(value)`` consumes the next stream item (a bit for the public
  counting surface; internal composites feed larger integers with the same
  per-item sensitivity of one),
* ``advance_zeros(k)`` consumes k zero items at once, with the exact same
  output law as k ``feed(0)`` calls (segment seals are skipped with
  geometric waiting times; tree-node noise is keyed by site, not by call
  order),
* ``output()`` returns the current private count,
* ``true_count()`` is a test-only accessor for the exact count,
* ``epsilon_ledger()`` lists per-time-range privacy charges such that the
  charges covering any single timestep sum to the advertised budget.

BinaryCounter: finite horizon T; every item lands in ceil(log2 T)+1 dyadic
partial sums, each perturbed once; a prefix count sums the noisy partial
sums covering [1, t].

HybridCounter: infinite horizon; a carry chain releases one noisy total per
completed power-of-two level, and a fresh binary counter with half the
budget covers the open level.

SparseCounter: finite horizon; ones accumulate in segments that seal when a
noisy segment count crosses a noisy threshold, and only sealed totals are
released through an inner HybridCounter at half budget.

InhomogeneousCounter: level-structured counter with a starting level r0 and
per-level budgets; level r runs a fresh SparseCounter of horizon 2**r at
half that level's budget, plus one noisy carry per level boundary.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass

from .noise import IntLaplace, NoiseStream

__all__ = [
    "StateError",
    "LedgerEntry",
    "BinaryCounter",
    "HybridCounter",
    "SparseCounter",
    "InhomogeneousCounter",
    "ExactCounter",
]

# site tags for keyed noise (first component of every draw site)
_BIN_NODE = 1
_HYB_CARRY = 2
_HYB_NODE = 3
_SVT_THRESHOLD = 4
_SVT_COMPARE = 5
_SVT_SKIP = 6
_INHOM_CARRY = 7
# child-stream tags
_CHILD_INNER = 10
_CHILD_LEVEL = 11


class StateError(RuntimeError):
    """Counter driven outside its contract (horizon, start level, order)."""


@dataclass(frozen=True)
class LedgerEntry:
    mechanism: str
    t_lo: int
    t_hi: int
    epsilon: float

    def covers(self, t: int) -> bool:
        return self.t_lo <= t <= self.t_hi

    def as_dict(self) -> dict:
        return {
            "mechanism": self.mechanism,
            "time_range": [self.t_lo, self.t_hi],
            "epsilon": self.epsilon,
        }


def ledger_charge_at(entries: list[LedgerEntry], t: int) -> float:
    return sum(e.epsilon for e in entries if e.covers(t))


class _EventLog:
    """Append-only nonzero increments with O(log) range sums."""

    __slots__ = ("times", "cums")

    def __init__(self):
        self.times: list[int] = []
        self.cums: list[int] = []

    def add(self, t: int, value: int) -> None:
        prev = self.cums[-1] if self.cums else 0
        self.times.append(t)
        self.cums.append(prev + value)

    def prefix(self, t: int) -> int:
        i = bisect_right(self.times, t)
        return self.cums[i - 1] if i else 0

    def range_sum(self, lo: int, hi: int) -> int:
        return self.prefix(hi) - self.prefix(lo - 1)

    def total(self) -> int:
        return self.cums[-1] if self.cums else 0


def _dyadic_blocks(t: int):
    """Aligned dyadic blocks tiling [1, t], largest first: (size_log, index)."""
    for i in range(t.bit_length() - 1, -1, -1):
        if (t >> i) & 1:
            yield i, t >> i


class BinaryCounter:
    """Dyadic-tree counter for a finite horizon."""

    __slots__ = ("horizon", "epsilon", "_noise", "_sigma", "_t", "_events", "_node_noise")

    def __init__(self, horizon: int, epsilon: float, noise: NoiseStream):
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        if not epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        self.horizon = horizon
        self.epsilon = epsilon
        self._noise = noise
        levels = (horizon - 1).bit_length() + 1
        self._sigma = levels / epsilon
        self._t = 0
        self._events = _EventLog()
        self._node_noise: dict[tuple[int, int], int] = {}

    @property
    def time(self) -> int:
        return self._t

    def feed(self, value: int) -> None:
        if self._t >= self.horizon:
            raise StateError(f"binary counter horizon {self.horizon} exhausted")
        self._t += 1
        if value:
            self._events.add(self._t, value)

    def advance_zeros(self, k: int) -> None:
        if k < 0:
            raise ValueError("k must be >= 0")
        if self._t + k > self.horizon:
            raise StateError(f"binary counter horizon {self.horizon} exhausted")
        self._t += k

    def _node(self, i: int, idx: int) -> int:
        key = (i, idx)
        val = self._node_noise.get(key)
        if val is None:
            val = self._noise.int_laplace(self._sigma, _BIN_NODE, i, idx, label="binary_node")
            self._node_noise[key] = val
        return val

    def output(self) -> int:
        t = self._t
        if t == 0:
            return 0
        total = 0
        for i, idx in _dyadic_blocks(t):
            end = idx << i
            total += self._events.range_sum(end - (1 << i) + 1, end) + self._node(i, idx)
        return total

    def true_count(self) -> int:
        return self._events.total()

    def charge_at(self, t: int) -> float:
        return self.epsilon if 1 <= t <= self.horizon else 0.0

    def epsilon_ledger(self) -> list[LedgerEntry]:
        return [LedgerEntry("binary", 1, self.horizon, self.epsilon)]


class HybridCounter:
    """Infinite-horizon counter: per-level carries plus an open-level binary tree.

    Level k covers times [2**k, 2**(k+1)).  Closing a level adds its exact
    sum plus one Laplace draw to the carry (budget eps/2 via disjoint
    levels); within the open level a dyadic tree at budget eps/2 covers the
    prefix.  All noise is site-keyed, so outputs are pure functions of the
    fed stream and the clock.
    """

    __slots__ = ("epsilon", "_noise", "_t", "_events", "_carry_cache", "_node_noise")

    def __init__(self, epsilon: float, noise: NoiseStream):
        if not epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        self.epsilon = epsilon
        self._noise = noise
        self._t = 0
        self._events = _EventLog()
        self._carry_cache = [0]  # entry L = noisy count of levels < L
        self._node_noise: dict[tuple[int, int, int], int] = {}

    @property
    def time(self) -> int:
        return self._t

    def feed(self, value: int) -> None:
        self._t += 1
        if value:
            self._events.add(self._t, value)

    def advance_zeros(self, k: int) -> None:
        if k < 0:
            raise ValueError("k must be >= 0")
        self._t += k

    def _carry(self, level: int) -> int:
        cache = self._carry_cache
        sigma = 2.0 / self.epsilon
        while len(cache) <= level:
            k = len(cache) - 1  # level being closed
            lo, hi = 1 << k, (1 << (k + 1)) - 1
            noise = self._noise.int_laplace(sigma, _HYB_CARRY, k, label="hybrid_carry")
            cache.append(cache[-1] + self._events.range_sum(lo, hi) + noise)
        return cache[level]

    def _node(self, level: int, i: int, idx: int) -> int:
        key = (level, i, idx)
        val = self._node_noise.get(key)
        if val is None:
            sigma = 2.0 * (level + 1) / self.epsilon
            val = self._noise.int_laplace(sigma, _HYB_NODE, level, i, idx, label="hybrid_node")
            self._node_noise[key] = val
        return val

    def output(self) -> int:
        t = self._t
        if t == 0:
            return 0
        level = t.bit_length() - 1
        total = self._carry(level)
        base = (1 << level) - 1  # local time u is global base + u
        local = t - base
        for i, idx in _dyadic_blocks(local):
            end = idx << i
            total += self._events.range_sum(base + end - (1 << i) + 1, base + end)
            total += self._node(level, i, idx)
        return total

    def true_count(self) -> int:
        return self._events.total()

    def charge_at(self, t: int) -> float:
        return self.epsilon if t >= 1 else 0.0

    def epsilon_ledger(self) -> list[LedgerEntry]:
        if self._t == 0:
            return []
        entries = []
        half = self.epsilon / 2.0
        for k in range(self._t.bit_length()):
            lo, hi = 1 << k, (1 << (k + 1)) - 1
            entries.append(LedgerEntry("hybrid_carry", lo, hi, half))
            entries.append(LedgerEntry("hybrid_binary", lo, hi, half))
        return entries


class SparseCounter:
    """Finite-horizon counter that spends budget only on sealed segments.

    The partition threshold is 9*ln(T)/eps (natural log).  Each feed first
    re-checks the threshold with one fresh Laplace draw (a failed check
    seals the segment *before* the new item is consumed), then consumes the
    item.  Sealed segment totals are fed as single items into an inner
    HybridCounter at eps/2.

    ``stale_sum_mode`` resolves the released value: "replace" treats the
    inner counter's current output as the private total of sealed segments;
    "accumulate" sums successive inner outputs (literal reading, which
    double-counts; kept behind the flag for comparison).
    """

    __slots__ = (
        "horizon", "epsilon", "threshold_base", "stale_sum_mode", "_noise",
        "_cmp_dist", "_t", "_total", "_segments_sealed", "_seg_count",
        "_threshold", "_checks", "_skips", "_inner", "_acc_sum",
    )

    def __init__(self, horizon: int, epsilon: float, noise: NoiseStream,
                 stale_sum_mode: str = "replace"):
        if horizon < 1:
            raise ValueError(f"horizon must be >= 1, got {horizon}")
        if not epsilon > 0:
            raise ValueError(f"epsilon must be positive, got {epsilon}")
        if stale_sum_mode not in ("replace", "accumulate"):
            raise ValueError(f"unknown stale_sum_mode {stale_sum_mode!r}")
        self.horizon = horizon
        self.epsilon = epsilon
        self.threshold_base = 9.0 * math.log(horizon) / epsilon
        self.stale_sum_mode = stale_sum_mode
        self._noise = noise
        self._cmp_dist = IntLaplace(2.0 / epsilon)
        self._t = 0
        self._total = 0
        self._segments_sealed = 0
        self._seg_count = 0
        self._threshold: float | None = None
        self._checks = 0
        self._skips = 0
        self._inner: HybridCounter | None = None
        self._acc_sum = 0

    @property
    def time(self) -> int:
        return self._t

    @property
    def segments_sealed(self) -> int:
        return self._segments_sealed

    @property
    def open_segment_count(self) -> int:
        return self._seg_count

    def _current_threshold(self) -> float:
        if self._threshold is None:
            j = self._segments_sealed  # 0-based index of the open segment
            eta = self._noise.int_laplace(
                self._cmp_dist.sigma, _SVT_THRESHOLD, j, label="svt_threshold")
            self._threshold = self.threshold_base + eta
        return self._threshold

    def _ensure_inner(self) -> HybridCounter:
        if self._inner is None:
            self._inner = HybridCounter(self.epsilon / 2.0, self._noise.child(_CHILD_INNER))
        return self._inner

    def _seal(self) -> None:
        inner = self._ensure_inner()
        inner.feed(self._seg_count)
        if self.stale_sum_mode == "accumulate":
            self._acc_sum += inner.output()
        self._segments_sealed += 1
        self._seg_count = 0
        self._threshold = None

    def _check_seals(self) -> None:
        # one fresh comparison draw per check; a failure seals and re-checks
        while True:
            threshold = self._current_threshold()
            nu = self._noise.int_laplace(
                self._cmp_dist.sigma, _SVT_COMPARE, self._checks, label="svt_compare")
            self._checks += 1
            if self._seg_count + nu <= threshold:
                return
            self._seal()

    def feed(self, value: int) -> None:
        if self._t >= self.horizon:
            raise StateError(f"sparse counter horizon {self.horizon} exhausted")
        self._check_seals()
        self._t += 1
        self._seg_count += value
        self._total += value

    def _seal_probability(self) -> float:
        gap = self._current_threshold() - self._seg_count
        if not self._noise.control.active("svt_compare"):
            return 1.0 if 0 > gap else 0.0
        return self._cmp_dist.tail_gt(gap)

    def advance_zeros(self, k: int) -> None:
        """Consume k zero items; output law identical to k feed(0) calls."""
        if k < 0:
            raise ValueError("k must be >= 0")
        if self._t + k > self.horizon:
            raise StateError(f"sparse counter horizon {self.horizon} exhausted")
        while k > 0:
            q = self._seal_probability()
            if q <= 0.0:
                self._t += k
                return
            if q >= 1.0:
                self._seal()
                continue
            u = self._noise.uniform(_SVT_SKIP, self._skips)
            self._skips += 1
            self._noise.control.draw_counts["svt_skip"] += 1
            passes = math.floor(math.log(u) / math.log1p(-q))
            if passes >= k:
                self._t += k
                return
            self._t += passes
            k -= passes
            self._seal()

    def output(self) -> int:
        if self.stale_sum_mode == "accumulate":
            return self._acc_sum
        return self._inner.output() if self._inner is not None else 0

    def true_count(self) -> int:
        return self._total

    def charge_at(self, t: int) -> float:
        return self.epsilon if 1 <= t <= self.horizon else 0.0

    def epsilon_ledger(self) -> list[LedgerEntry]:
        half = self.epsilon / 2.0
        return [
            LedgerEntry("sparse_svt", 1, self.horizon, half),
            LedgerEntry("sparse_inner", 1, self.horizon, half),
        ]


class InhomogeneousCounter:
    """Level-structured sparse counter with a starting level and a budget per level.

    Outputs exist only for t >= 2**r0; items fed before that time are
    ignored entirely (they touch no state and no noise).  Level r is active
    for t in [2**r, 2**(r+1)) and is served by a fresh SparseCounter with
    horizon 2**r at half the level budget; closing a level adds its exact
    sum plus one Laplace draw at scale 2/eps_r to the frozen carry.

    ``start_time`` is the stream time of the first item this instance will
    be fed (at most 2**r0); an engine that creates the counter at time 2**r0
    passes that time so the internal clock matches the global one.
    """

    __slots__ = (
        "r0", "schedule", "stale_sum_mode", "_noise", "_t", "_level",
        "_level_eps", "_sparse", "_carry", "_level_sum", "_total",
    )

    def __init__(self, r0: int, schedule, noise: NoiseStream, start_time: int = 1,
                 stale_sum_mode: str = "replace"):
        if r0 < 0:
            raise ValueError(f"starting level must be >= 0, got {r0}")
        if not (1 <= start_time <= (1 << r0)):
            raise ValueError(f"start_time {start_time} not in [1, 2**r0]")
        self.r0 = r0
        self.schedule = schedule
        self.stale_sum_mode = stale_sum_mode
        self._noise = noise
        self._t = start_time - 1
        self._level: int | None = None
        self._level_eps = 0.0
        self._sparse: SparseCounter | None = None
        self._carry = 0
        self._level_sum = 0
        self._total = 0

    @property
    def time(self) -> int:
        return self._t

    @property
    def level(self) -> int | None:
        return self._level

    def _level_epsilon(self, r: int) -> float:
        eps = float(self.schedule(r))
        if not eps > 0:
            raise ValueError(f"schedule must be positive at level {r}, got {eps}")
        return eps

    def _open_level(self, r: int) -> None:
        self._level = r
        self._level_eps = self._level_epsilon(r)
        self._sparse = SparseCounter(
            1 << r, self._level_eps / 2.0, self._noise.child(_CHILD_LEVEL, r),
            stale_sum_mode=self.stale_sum_mode)
        self._level_sum = 0

    def _close_level(self) -> None:
        r = self._level
        noise = self._noise.int_laplace(
            2.0 / self._level_eps, _INHOM_CARRY, r, label="level_carry")
        self._carry += self._level_sum + noise
        self._open_level(r + 1)

    def _roll_to(self, t_next: int) -> None:
        if self._level is None:
            self._open_level(self.r0)
        while t_next >= (1 << (self._level + 1)):
            self._close_level()

    def feed(self, value: int) -> None:
        t_next = self._t + 1
        if t_next < (1 << self.r0):
            self._t = t_next  # before the starting level: ignored
            return
        self._roll_to(t_next)
        self._sparse.feed(value)
        self._t = t_next
        self._level_sum += value
        self._total += value

    def advance_zeros(self, k: int) -> None:
        if k < 0:
            raise ValueError("k must be >= 0")
        start = 1 << self.r0
        while k > 0:
            t_next = self._t + 1
            if t_next < start:
                jump = min(k, start - t_next)
                self._t += jump
                k -= jump
                continue
            self._roll_to(t_next)
            level_end = (1 << (self._level + 1)) - 1
            jump = min(k, level_end - self._t)
            self._sparse.advance_zeros(jump)
            self._t += jump
            k -= jump

    def output(self) -> int:
        if self._t < (1 << self.r0):
            raise StateError(
                f"no output before time {1 << self.r0} (starting level {self.r0})")
        return self._carry + self._sparse.output()

    def true_count(self) -> int:
        """Exact count of items fed at times >= 2**r0."""
        return self._total

    def open_segment_count(self) -> int:
        return self._sparse.open_segment_count if self._sparse is not None else 0

    def charge_at(self, t: int) -> float:
        if t < 1:
            return 0.0
        level = t.bit_length() - 1
        return self._level_epsilon(level) if level >= self.r0 else 0.0

    def epsilon_ledger(self) -> list[LedgerEntry]:
        if self._level is None:
            return []
        entries = []
        for r in range(self.r0, self._level + 1):
            half = self._level_epsilon(r) / 2.0
            lo, hi = 1 << r, (1 << (r + 1)) - 1
            entries.append(LedgerEntry("inhom_sparse", lo, hi, half))
            entries.append(LedgerEntry("inhom_carry", lo, hi, half))
        return entries


class ExactCounter:
    """Noise-free prefix counter (oracle for tests and CLI)."""

    __slots__ = ("_t", "_total")

    def __init__(self):
        self._t = 0
        self._total = 0

    @property
    def time(self) -> int:
        return self._t

    def feed(self, value: int) -> None:
        self._t += 1
        self._total += value

    def advance_zeros(self, k: int) -> None:
        self._t += k

    def output(self) -> int:
        return self._total

    def true_count(self) -> int:
        return self._total

    def charge_at(self, t: int) -> float:
        return 0.0

    def epsilon_ledger(self) -> list[LedgerEntry]:
        return []
