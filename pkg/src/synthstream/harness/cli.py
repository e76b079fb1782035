"""Command line surface: run / bench / audit / count / perf.

Exit codes: 0 ok, 2 usage error, 3 validation or failed check, 4 internal.
The default seed comes from SYNTHSTREAM_SEED when set.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from ..counters import (
    BinaryCounter, HybridCounter, InhomogeneousCounter, SparseCounter,
)
from ..engine import MODES, SynthEngine, default_mode
from ..noise import NoiseControl, NoiseStream
from ..partition import DomainError
from .audit import run_audit
from .bench import run_bench
from .perf import run_perf
from .report import BENCH_COLUMNS, git_describe, write_csv, write_meta
from .streams import STREAM_KINDS

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_VALIDATION = 3
EXIT_INTERNAL = 4


class UsageError(Exception):
    pass


class ValidationError(Exception):
    pass


def _default_seed() -> int:
    return int(os.environ.get("SYNTHSTREAM_SEED", "0"))


def _open_in(path: str):
    return sys.stdin if path == "-" else open(path, "r")


def _open_out(path: str):
    return sys.stdout if path == "-" else open(path, "w")


def _parse_point_line(line: str, lineno: int, fmt: str, dim: int):
    try:
        if fmt == "jsonl":
            record = json.loads(line)
            x = record["x"]
        else:
            x = [float(v) for v in line.split(",")]
        x = [float(v) for v in x]
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise ValidationError(f"line {lineno}: malformed point record ({exc})")
    if len(x) != dim:
        raise ValidationError(f"line {lineno}: expected {dim} coordinates, got {len(x)}")
    return x


def _iter_points(fh, fmt: str, dim: int):
    for lineno, line in enumerate(fh, start=1):
        line = line.strip()
        if not line:
            continue
        yield lineno, _parse_point_line(line, lineno, fmt, dim)


def _load_points(path: str, fmt: str, dim: int) -> np.ndarray:
    with _open_in(path) as fh:
        pts = [x for _, x in _iter_points(fh, fmt, dim)]
    if not pts:
        raise ValidationError(f"{path}: no points found")
    return np.asarray(pts, dtype=float)


def _require_positive_epsilon(epsilon: float) -> None:
    if not epsilon > 0:
        raise UsageError(f"--epsilon must be positive, got {epsilon}")


def _require_power_of_two(value: int, flag: str) -> None:
    if value < 1 or value & (value - 1):
        raise UsageError(f"{flag} must be a power of two, got {value}")


# -- subcommands -----------------------------------------------------------

def cmd_run(args) -> int:
    _require_positive_epsilon(args.epsilon)
    if args.emit_every < 1:
        raise UsageError("--emit-every must be >= 1")
    mode = args.mode or default_mode(args.dim)
    engine = SynthEngine(args.dim, args.epsilon, mode=mode, seed=args.seed,
                         noise_off=args.noise_off)
    out = _open_out(args.output)
    try:
        with _open_in(args.input) as fh:
            for lineno, x in _iter_points(fh, args.format, args.dim):
                try:
                    engine.advance(x)
                except DomainError as exc:
                    raise ValidationError(f"line {lineno}: {exc}")
                if engine.t % args.emit_every == 0:
                    if args.counts_only:
                        payload = {"t": engine.t, "counts": engine.consistent_counts()}
                    else:
                        payload = {"t": engine.t,
                                   "points": engine.emit().points.tolist()}
                    out.write(json.dumps(payload) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_bench(args) -> int:
    _require_positive_epsilon(args.epsilon)
    _require_power_of_two(args.tmax, "--tmax")
    report = run_bench(args.dim, args.epsilon, args.trials, args.tmax,
                       stream=args.stream, seed=args.seed, mode=args.mode,
                       noise_off=args.noise_off)
    rows = [
        {k: ("" if row[k] is None else row[k]) for k in BENCH_COLUMNS}
        for row in report["rows"]
    ]
    write_csv(args.output, rows, BENCH_COLUMNS)
    meta = {k: report[k] for k in
            ("dim", "epsilon", "mode", "stream", "trials", "tmax", "seed",
             "noise_off", "fit_min", "fit", "mean_w1")}
    meta["mean_w1"] = {str(t): v for t, v in meta["mean_w1"].items()}
    meta["build"] = git_describe()
    write_meta(args.output + ".meta.json", meta)
    fit = report["fit"]
    print(f"slope={fit['slope']:.4f} ci95=[{fit['ci95'][0]:.4f}, {fit['ci95'][1]:.4f}] "
          f"rows={len(rows)} csv={args.output}")
    return EXIT_OK


def cmd_audit(args) -> int:
    _require_positive_epsilon(args.epsilon)
    points_a = _load_points(args.input_a, args.format, args.dim)
    points_b = _load_points(args.input_b, args.format, args.dim)
    try:
        report = run_audit(points_a, points_b, args.dim, args.epsilon,
                           mode=args.mode, seed=args.seed)
    except ValueError as exc:
        raise ValidationError(str(exc))
    if args.t_diff is not None and report["t_diff"] != args.t_diff:
        raise ValidationError(
            f"streams differ at t={report['t_diff']}, expected --t-diff {args.t_diff}")
    print(json.dumps(report, indent=2))
    return EXIT_OK if report["ok"] else EXIT_VALIDATION


def _build_counter(args):
    noise = NoiseStream(args.seed, control=NoiseControl(disabled=args.noise_off))
    if args.mechanism in ("binary", "sparse") and args.horizon is None:
        raise UsageError(f"--horizon is required for --mechanism {args.mechanism}")
    if args.mechanism == "binary":
        return BinaryCounter(args.horizon, args.epsilon, noise)
    if args.mechanism == "sparse":
        return SparseCounter(args.horizon, args.epsilon, noise)
    if args.mechanism == "hybrid":
        return HybridCounter(args.epsilon, noise)
    return InhomogeneousCounter(args.r0, lambda r: args.epsilon, noise)


def cmd_count(args) -> int:
    _require_positive_epsilon(args.epsilon)
    if args.r0 < 0:
        raise UsageError("--r0 must be >= 0")
    counter = _build_counter(args)
    out = _open_out(args.output)
    first_output = (1 << args.r0) if args.mechanism == "inhom" else 1
    try:
        out.write("t,private_count" + (",true_count" if args.oracle else "") + "\n")
        true_total = 0
        with _open_in(args.input) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                if line not in ("0", "1"):
                    raise ValidationError(f"line {lineno}: expected a 0/1 bit, got {line!r}")
                bit = int(line)
                true_total += bit
                counter.feed(bit)
                t = counter.time
                if t < first_output:
                    continue
                row = f"{t},{counter.output()}"
                if args.oracle:
                    row += f",{true_total}"
                out.write(row + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return EXIT_OK


def cmd_perf(args) -> int:
    _require_positive_epsilon(args.epsilon)
    _require_power_of_two(args.tmax, "--tmax")
    report = run_perf(args.dim, args.tmax, epsilon=args.epsilon,
                      seed=args.seed, mode=args.mode)
    for t in sorted(report["cumulative_seconds"]):
        ratio = report["doubling_ratios"].get(t)
        ratio_s = f" ratio={ratio:.3f}" if ratio is not None else ""
        print(f"t={t:>8} cumulative={report['cumulative_seconds'][t]:.3f}s{ratio_s}")
    print(f"max_ratio={report['max_ratio']:.3f} limit={report['ratio_limit']} "
          f"{'OK' if report['ok'] else 'FAIL'}")
    return EXIT_OK if report["ok"] else EXIT_VALIDATION


# -- parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="synthstream",
        description="Streaming differentially private synthetic data engine.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, dim_required=True):
        p.add_argument("--dim", type=int, required=dim_required, help="data dimension d")
        p.add_argument("--epsilon", type=float, default=1.0, help="total privacy budget")
        p.add_argument("--mode", choices=MODES, default=None,
                       help="counter mode (default: replay-hybrid for d=1, else inhom-sparse)")
        p.add_argument("--seed", type=int, default=_default_seed(),
                       help="base seed (default: SYNTHSTREAM_SEED or 0)")

    p_run = sub.add_parser("run", help="stream points in, synthetic datasets out")
    common(p_run)
    p_run.add_argument("--input", default="-", help="JSONL/CSV point file, '-' for stdin")
    p_run.add_argument("--output", default="-", help="output path, '-' for stdout")
    p_run.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p_run.add_argument("--emit-every", type=int, default=1, metavar="K",
                       help="emit every K steps")
    p_run.add_argument("--counts-only", action="store_true",
                       help="emit consistent counts instead of points")
    p_run.add_argument("--noise-off", action="store_true",
                       help="exact counts (test oracle; not private)")
    p_run.set_defaults(fn=cmd_run)

    p_bench = sub.add_parser("bench", help="W1 accuracy benchmark with slope fit")
    common(p_bench)
    p_bench.add_argument("--trials", type=int, default=20)
    p_bench.add_argument("--tmax", type=int, default=1 << 14)
    p_bench.add_argument("--stream", choices=STREAM_KINDS, default="uniform")
    p_bench.add_argument("--output", default="bench.csv")
    p_bench.add_argument("--noise-off", action="store_true")
    p_bench.set_defaults(fn=cmd_bench)

    p_audit = sub.add_parser("audit", help="structural privacy audit of a neighbor pair")
    common(p_audit)
    p_audit.add_argument("--input-a", required=True)
    p_audit.add_argument("--input-b", required=True)
    p_audit.add_argument("--format", choices=("jsonl", "csv"), default="jsonl")
    p_audit.add_argument("--t-diff", type=int, default=None,
                         help="expected index (1-based) of the differing point")
    p_audit.set_defaults(fn=cmd_audit)

    p_count = sub.add_parser("count", help="drive a single counting mechanism")
    p_count.add_argument("--mechanism", required=True,
                         choices=("binary", "hybrid", "sparse", "inhom"))
    p_count.add_argument("--epsilon", type=float, default=1.0)
    p_count.add_argument("--horizon", type=int, default=None)
    p_count.add_argument("--r0", type=int, default=0, help="starting level (inhom)")
    p_count.add_argument("--seed", type=int, default=_default_seed())
    p_count.add_argument("--input", default="-", help="one 0/1 bit per line")
    p_count.add_argument("--output", default="-")
    p_count.add_argument("--oracle", action="store_true", help="add a true-count column")
    p_count.add_argument("--noise-off", action="store_true")
    p_count.set_defaults(fn=cmd_count)

    p_perf = sub.add_parser("perf", help="cumulative-cost scaling check")
    common(p_perf)
    p_perf.add_argument("--tmax", type=int, default=1 << 16)
    p_perf.set_defaults(fn=cmd_perf)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValidationError as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except BrokenPipeError:
        return EXIT_OK
    except Exception as exc:  # pragma: no cover - defensive
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
