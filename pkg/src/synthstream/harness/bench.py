"""Accuracy benchmark: W1 against the true stream at power-of-two checkpoints.

Per trial, the engine consumes a generated stream; at each checkpoint the
harness records exact W1 (while the matching oracle is affordable), the
hierarchical tree bound, and the Lipschitz-query gap.  The headline number
is the log-log slope of mean W1 against t, fitted over checkpoints from
``fit_min`` up, using exact W1 where available and the tree bound beyond.
"""

from __future__ import annotations

import time

import numpy as np
from scipy import stats

from ..engine import SynthEngine, default_mode
from ..metrics import (
    default_queries, lipschitz_gap, w1_1d, w1_matching, w1_tree_bound,
    MATCHING_SIZE_CAP,
)
from .streams import make_stream

__all__ = ["run_bench", "fit_loglog_slope"]


def _checkpoints(tmax: int, start: int = 4) -> list[int]:
    return [1 << k for k in range(start.bit_length() - 1, tmax.bit_length()) if (1 << k) >= start]


def fit_loglog_slope(ts, values) -> dict:
    """Least-squares slope of log2(value) vs log2(t) with a 95% CI."""
    ts = np.asarray(ts, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(ts) < 3:
        raise ValueError("need at least 3 checkpoints to fit a slope")
    if np.any(values <= 0):
        raise ValueError("W1 series must be positive for a log-log fit")
    res = stats.linregress(np.log2(ts), np.log2(values))
    half_width = stats.t.ppf(0.975, len(ts) - 2) * res.stderr
    return {
        "slope": float(res.slope),
        "stderr": float(res.stderr),
        "ci95": [float(res.slope - half_width), float(res.slope + half_width)],
        "r_value": float(res.rvalue),
    }


def run_bench(dim: int, epsilon: float, trials: int, tmax: int,
              stream: str = "uniform", seed: int = 0, mode: str | None = None,
              noise_off: bool = False, fit_min: int = 256,
              exact_cap: int = MATCHING_SIZE_CAP) -> dict:
    """Run the accuracy benchmark and fit the W1 decay slope."""
    if tmax < 4 or tmax & (tmax - 1):
        raise ValueError(f"tmax must be a power of two >= 4, got {tmax}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    checkpoints = _checkpoints(tmax)
    queries = default_queries(dim, seed=seed)
    rows = []
    series: dict[int, list[float]] = {t: [] for t in checkpoints}
    for trial in range(trials):
        base = seed * 1_000_003 + trial
        points = make_stream(stream, dim, tmax, seed=2 * base)
        engine = SynthEngine(dim, epsilon, mode=mode, seed=2 * base + 1,
                             noise_off=noise_off)
        engine_seconds = 0.0
        mark = time.perf_counter()
        for i in range(tmax):
            engine.advance(points[i])
            t = i + 1
            if t & (t - 1) == 0 and t >= checkpoints[0]:
                counts = engine.consistent_counts()
                synth = engine.emit()
                engine_seconds += time.perf_counter() - mark
                truth = points[:t]
                w1_exact = None
                if t <= exact_cap:
                    if dim == 1:
                        w1_exact = w1_1d(truth[:, 0], synth.points[:, 0])
                    else:
                        w1_exact = w1_matching(truth, synth.points)
                bound = w1_tree_bound(engine.tree.true_counts, counts,
                                      engine.tree.depth, dim)
                gap = lipschitz_gap(truth, synth.points, queries)
                rows.append({
                    "t": t,
                    "trial": trial,
                    "w1_exact": w1_exact,
                    "w1_tree_bound": bound,
                    "lipschitz_gap": gap,
                    "wall_time_per_step": engine_seconds / t,
                })
                series[t].append(w1_exact if w1_exact is not None else bound)
                mark = time.perf_counter()
    mean_series = {t: float(np.mean(vals)) for t, vals in series.items()}
    fit_ts = [t for t in checkpoints if t >= fit_min]
    fit = fit_loglog_slope(fit_ts, [mean_series[t] for t in fit_ts])
    return {
        "dim": dim,
        "epsilon": epsilon,
        "mode": mode or default_mode(dim),
        "stream": stream,
        "trials": trials,
        "tmax": tmax,
        "seed": seed,
        "noise_off": noise_off,
        "checkpoints": checkpoints,
        "mean_w1": mean_series,
        "fit_min": fit_min,
        "fit": fit,
        "rows": rows,
    }
