"""Timing harness: cumulative cost of processing a stream with checkpoint emission.

Cumulative wall time to reach t (including materializing the synthetic
dataset at each power-of-two checkpoint) should roughly double between
consecutive doublings of t; ratios are checked against a limit consistent
with near-linear total cost.
"""

from __future__ import annotations

import time

from ..engine import SynthEngine
from .streams import make_stream

__all__ = ["run_perf"]


def run_perf(dim: int, tmax: int, epsilon: float = 1.0, seed: int = 0,
             mode: str | None = None, start: int = 1024,
             ratio_limit: float = 2.6) -> dict:
    if tmax & (tmax - 1) or tmax < start:
        raise ValueError(f"tmax must be a power of two >= {start}, got {tmax}")
    points = make_stream("uniform", dim, tmax, seed)
    engine = SynthEngine(dim, epsilon, mode=mode, seed=seed)
    cumulative: dict[int, float] = {}
    began = time.perf_counter()
    for i in range(tmax):
        engine.advance(points[i])
        t = i + 1
        if t & (t - 1) == 0 and t >= start:
            engine.emit()
            cumulative[t] = time.perf_counter() - began
    ts = sorted(cumulative)
    ratios = {ts[i]: cumulative[ts[i]] / cumulative[ts[i - 1]]
              for i in range(1, len(ts))}
    return {
        "dim": dim,
        "tmax": tmax,
        "epsilon": epsilon,
        "mode": engine.mode,
        "seed": seed,
        "cumulative_seconds": cumulative,
        "doubling_ratios": ratios,
        "max_ratio": max(ratios.values()) if ratios else 0.0,
        "ratio_limit": ratio_limit,
        "ok": all(r <= ratio_limit for r in ratios.values()),
    }
