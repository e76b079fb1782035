"""CSV / JSON report emission for benchmark and audit runs."""

from __future__ import annotations

import csv
import json
import subprocess
from pathlib import Path

__all__ = ["BENCH_COLUMNS", "git_describe", "write_csv", "write_meta"]

BENCH_COLUMNS = [
    "t", "trial", "w1_exact", "w1_tree_bound", "lipschitz_gap",
    "wall_time_per_step",
]


def git_describe() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=10)
        if out.returncode == 0:
            return out.stdout.strip()
    except (OSError, subprocess.SubprocessError):
        pass
    return "unknown"


def write_csv(path: str | Path, rows: list[dict], columns: list[str]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=columns)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row.get(k, "") for k in columns})


def write_meta(path: str | Path, meta: dict) -> None:
    with open(path, "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
