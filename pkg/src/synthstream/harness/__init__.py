"""Operational surface: stream generators, benchmark/audit/perf runners, CLI."""

from .audit import neighbor_diff_index, predicted_influence, run_audit
from .bench import fit_loglog_slope, run_bench
from .perf import run_perf
from .streams import STREAM_KINDS, make_stream

__all__ = [
    "STREAM_KINDS",
    "make_stream",
    "run_bench",
    "fit_loglog_slope",
    "run_audit",
    "neighbor_diff_index",
    "predicted_influence",
    "run_perf",
]
