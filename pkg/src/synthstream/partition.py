"""Online binary hierarchical partition of the unit hypercube.

Regions are addressed by bit strings: bit k of an address halves axis
(k mod d), 0 for the lower half.  A level-j region has volume 2**-j and
l-infinity diameter 2**-(j // d).  Cells are half-open except that the
topmost cell on each axis is closed at 1, so every point of the cube lies
in exactly one cell per level.  The tree grows breadth first: all level-j
regions come into existence at time 2**j.
"""

from __future__ import annotations

import json

import numpy as np

__all__ = ["DomainError", "Region", "PartitionTree", "leaf_centers", "region_diameter"]


class DomainError(ValueError):
    """Point outside the unit hypercube."""


class Region:
    """One cell of the partition: an address and its box."""

    __slots__ = ("bits", "dim", "box")

    def __init__(self, bits: str, dim: int):
        self.bits = bits
        self.dim = dim
        lo = [0.0] * dim
        hi = [1.0] * dim
        for k, b in enumerate(bits):
            axis = k % dim
            mid = 0.5 * (lo[axis] + hi[axis])
            if b == "0":
                hi[axis] = mid
            else:
                lo[axis] = mid
        self.box = list(zip(lo, hi))

    @property
    def level(self) -> int:
        return len(self.bits)

    def diameter(self) -> float:
        return 2.0 ** -(self.level // self.dim)

    def volume(self) -> float:
        v = 1.0
        for lo, hi in self.box:
            v *= hi - lo
        return v

    def center(self) -> tuple[float, ...]:
        return tuple(0.5 * (lo + hi) for lo, hi in self.box)

    def contains(self, x) -> bool:
        for (lo, hi), xi in zip(self.box, x):
            if xi < lo:
                return False
            if xi >= hi and not (hi == 1.0 and xi == 1.0):
                return False
        return True

    def __repr__(self) -> str:
        return f"Region({self.bits!r}, dim={self.dim})"


def region_diameter(level: int, dim: int) -> float:
    return 2.0 ** -(level // dim)


def leaf_centers(level: int, dim: int) -> np.ndarray:
    """Centers of all level-`level` regions, ordered by address value.

    Row i is the center of the region whose address is i written as a
    `level`-bit string, matching ``PartitionTree.regions_at`` order.
    """
    n = 1 << level
    idx = np.arange(n, dtype=np.uint64)
    centers = np.empty((n, dim), dtype=float)
    for axis in range(dim):
        val = np.zeros(n)
        width = 1.0
        for k in range(axis, level, dim):
            width *= 0.5
            bit = (idx >> np.uint64(level - 1 - k)) & np.uint64(1)
            val += bit.astype(float) * width
        centers[:, axis] = val + 0.5 * width
    return centers


class PartitionTree:
    """Breadth-first-growing partition of [0,1]^d with per-region true counts.

    Regions themselves are implicit (an address determines its box); the
    tree tracks the current depth, exact point counts along inserted paths,
    and an attachment slot per region for counter handles.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise ValueError(f"dimension must be >= 1, got {dim}")
        self.dim = dim
        self.depth = 0
        self.true_counts: dict[str, int] = {"": 0}
        self.attachments: dict[str, object] = {}
        self._points: list[tuple[float, ...]] = []

    def creation_time(self, bits: str) -> int:
        return 1 << len(bits)

    def regions_at(self, level: int) -> list[str]:
        if level == 0:
            return [""]
        return [format(i, f"0{level}b") for i in range(1 << level)]

    def region(self, bits: str) -> Region:
        return Region(bits, self.dim)

    def refine(self) -> list[str]:
        """Grow the tree by one level; returns the new addresses in BFS order."""
        self.depth += 1
        return self.regions_at(self.depth)

    def _check_point(self, x) -> None:
        if len(x) != self.dim:
            raise DomainError(f"point has dimension {len(x)}, expected {self.dim}")
        for xi in x:
            if not (0.0 <= xi <= 1.0):
                raise DomainError(f"coordinate {xi} outside [0, 1]")

    def locate(self, x, level: int) -> str:
        """Address of the unique level-`level` region containing x."""
        self._check_point(x)
        if not (0 <= level <= self.depth):
            raise ValueError(f"level {level} not in [0, {self.depth}]")
        return self._locate_bits(x, level)

    def _locate_bits(self, x, level: int) -> str:
        dim = self.dim
        lo = [0.0] * dim
        hi = [1.0] * dim
        bits = []
        for k in range(level):
            axis = k % dim
            mid = 0.5 * (lo[axis] + hi[axis])
            if x[axis] < mid:
                bits.append("0")
                hi[axis] = mid
            else:
                bits.append("1")
                lo[axis] = mid
        return "".join(bits)

    def locate_path(self, x) -> list[str]:
        """Addresses of the regions containing x at levels 1..depth."""
        self._check_point(x)
        leaf = self._locate_bits(x, self.depth)
        return [leaf[:j] for j in range(1, self.depth + 1)]

    def add_point(self, x) -> list[str]:
        """Record a point in the true counts along its path; returns the path."""
        path = self.locate_path(x)
        counts = self.true_counts
        counts[""] += 1
        for bits in path:
            counts[bits] = counts.get(bits, 0) + 1
        return path

    def true_count(self, bits: str) -> int:
        return self.true_counts.get(bits, 0)

    def dump_json(self) -> str:
        """Debug dump of all current regions (address, box, creation time)."""
        rows = []
        for level in range(self.depth + 1):
            for bits in self.regions_at(level):
                rows.append({
                    "region": bits,
                    "box": self.region(bits).box,
                    "created_at": self.creation_time(bits),
                })
        return json.dumps(rows)
