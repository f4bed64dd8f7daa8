"""CSV serialization of runs, summaries, and bound tables.

Floats are written with %.17g, which round-trips any float64 exactly.
Infinities appear as inf/-inf; undefined quantities are empty fields;
booleans are true/false. Line endings are always a single newline so
identical inputs give byte-identical files on every platform.
"""

import csv

import numpy as np

from .bounds import GridCell
from .engine import ConfigSummary, SweepRun, Trajectory
from .errors import ConfigError
from .gaussian import Dataset

RUN_HEADER = [
    "generation",
    "seed",
    "lambda",
    "gamma",
    "mode",
    "n",
    "w2",
    "param_dist",
    "synth_pool_size",
]

SUMMARY_HEADER = [
    "lambda",
    "gamma",
    "mode",
    "replicates",
    "w2_late_mean",
    "w2_late_std",
    "param_dist_late_mean",
    "contraction_ratio_median",
]

BOUNDS_HEADER = [
    "lambda",
    "gamma",
    "admissible",
    "rho",
    "contraction_factor",
    "bound_t",
]

FAILURES_HEADER = ["config_index", "replicate", "seed", "error"]


def format_float(x: float) -> str:
    """Lossless float64 text form."""
    return f"{x:.17g}"


def _opt(x: float | None) -> str:
    return "" if x is None else format_float(x)


def _writer(fh):
    return csv.writer(fh, lineterminator="\n")


def write_run_csv(path: str, traj: Trajectory) -> None:
    """One row per generation of a single run."""
    c = traj.config
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(RUN_HEADER)
        for rec in traj.records:
            w.writerow(
                [
                    rec.generation,
                    c.seed,
                    format_float(c.lam),
                    format_float(c.correction.gamma),
                    c.correction.mode.value,
                    c.n,
                    format_float(rec.w2_to_target),
                    format_float(rec.param_dist_to_target),
                    rec.synth_pool_size,
                ]
            )


def read_run_csv(path: str) -> list[dict]:
    """Parse a run CSV back into typed row dicts."""
    with open(path, "r", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != RUN_HEADER:
            raise ConfigError(f"unexpected run CSV header in {path}")
        rows = []
        for row in reader:
            rows.append(
                {
                    "generation": int(row["generation"]),
                    "seed": int(row["seed"]),
                    "lambda": float(row["lambda"]),
                    "gamma": float(row["gamma"]),
                    "mode": row["mode"],
                    "n": int(row["n"]),
                    "w2": float(row["w2"]),
                    "param_dist": float(row["param_dist"]),
                    "synth_pool_size": int(row["synth_pool_size"]),
                }
            )
        return rows


def write_summary_csv(path: str, summaries: list[ConfigSummary]) -> None:
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(SUMMARY_HEADER)
        for s in summaries:
            w.writerow(
                [
                    format_float(s.lam),
                    format_float(s.gamma),
                    s.mode.value,
                    s.replicates,
                    format_float(s.w2_late_mean),
                    format_float(s.w2_late_std),
                    format_float(s.param_dist_late_mean),
                    format_float(s.contraction_ratio_median),
                ]
            )


def write_bounds_csv(
    path: str, cells: list[GridCell], bounds: list[float | None]
) -> None:
    """Admissibility grid with the error bound per cell; undefined
    quantities become empty fields."""
    if len(cells) != len(bounds):
        raise ConfigError("cells and bounds lengths differ")
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(BOUNDS_HEADER)
        for cell, bound in zip(cells, bounds):
            w.writerow(
                [
                    format_float(cell.lam),
                    format_float(cell.gamma),
                    "true" if cell.admissible else "false",
                    _opt(cell.rho),
                    _opt(cell.contraction),
                    _opt(bound),
                ]
            )


def write_failures_csv(path: str, runs: list[SweepRun]) -> None:
    """Failed sweep runs; written (possibly empty) on every sweep."""
    with open(path, "w", newline="") as fh:
        w = _writer(fh)
        w.writerow(FAILURES_HEADER)
        for run in runs:
            w.writerow([run.config_index, run.replicate, run.seed, run.error or ""])


def read_points_csv(path: str) -> Dataset:
    """Plain coordinate rows, no header; used for loop.real_data."""
    with open(path, "r", newline="") as fh:
        rows = [row for row in csv.reader(fh) if row]
    if not rows:
        raise ConfigError(f"no points in {path}")
    try:
        pts = np.array([[float(v) for v in row] for row in rows])
    except ValueError as e:
        raise ConfigError(f"bad number in {path}: {e}") from e
    return Dataset(pts)
