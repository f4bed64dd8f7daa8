"""Command line interface.

Subcommands: run (single trajectory), sweep (grid x replicates with
summary), bounds (admissibility and error-bound table), validate (fast
self-checks). Exit codes: 0 success, 1 completed with failures (failed
sweep runs or failed checks), 2 configuration or I/O errors.
"""

import argparse
import os
import sys
from dataclasses import replace

from .bounds import admissibility_grid, bound_trajectory
from .csvio import (
    read_points_csv,
    write_bounds_csv,
    write_failures_csv,
    write_run_csv,
    write_summary_csv,
)
from .engine import run_loop, summarize, sweep
from .errors import ConfigError, CorrloopError
from .experiment import Experiment, configs_for_sweep, load_experiment
from .validate import run_checks


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="corrloop",
        description="Corrected self-consuming training loops on Gaussian models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, seed=True, late_window=False):
        p.add_argument("--config", required=True, help="experiment TOML file")
        p.add_argument(
            "--set",
            action="append",
            default=[],
            metavar="SECTION.KEY=VALUE",
            help="override a config value (repeatable)",
        )
        p.add_argument("--out", help="output directory (default from config)")
        if seed:
            p.add_argument("--seed", type=int, help="override the run seed")
        if late_window:
            p.add_argument(
                "--late-window",
                type=int,
                dest="late_window",
                help="generations in the late summary window",
            )

    add_common(sub.add_parser("run", help="run one trajectory"))
    add_common(sub.add_parser("sweep", help="run a grid of configs"), late_window=True)
    add_common(sub.add_parser("bounds", help="tabulate stability bounds"), seed=False)
    sub.add_parser("validate", help="run fast self-checks")
    return parser


def _load(args) -> Experiment:
    return load_experiment(args.config, args.set)


def _real_data(exp: Experiment, config_path: str):
    if exp.real_data_path is None:
        return None
    path = exp.real_data_path
    if not os.path.isabs(path):
        path = os.path.join(os.path.dirname(os.path.abspath(config_path)), path)
    data = read_points_csv(path)
    return data


def _out_dir(args, exp: Experiment) -> str:
    out = args.out or exp.output.directory
    os.makedirs(out, exist_ok=True)
    return out


def _cmd_run(args) -> int:
    exp = _load(args)
    loop = exp.loop if args.seed is None else replace(exp.loop, seed=args.seed)
    traj = run_loop(loop, exp.target, real_data=_real_data(exp, args.config))
    out = _out_dir(args, exp)
    path = os.path.join(out, "run.csv")
    write_run_csv(path, traj)
    last = traj.records[-1]
    print(
        f"run complete: {loop.generations} generations, "
        f"final w2 {last.w2_to_target:.6g}, "
        f"final param dist {last.param_dist_to_target:.6g} -> {path}"
    )
    return 0


def _cmd_sweep(args) -> int:
    exp = _load(args)
    spec = exp.sweep
    if args.seed is not None:
        spec = replace(spec, base_seed=args.seed)
    if args.late_window is not None:
        if not (1 <= args.late_window <= exp.loop.generations + 1):
            raise ConfigError(
                "--late-window must be between 1 and generations + 1"
            )
        spec = replace(spec, late_window=args.late_window)
    configs = configs_for_sweep(exp)
    runs = sweep(
        configs,
        exp.target,
        spec.base_seed,
        spec.replicates,
        real_data=_real_data(exp, args.config),
    )
    out = _out_dir(args, exp)
    trajectories = []
    for run in runs:
        if run.trajectory is not None:
            trajectories.append(run.trajectory)
            write_run_csv(
                os.path.join(
                    out, f"run_c{run.config_index:03d}_r{run.replicate:03d}.csv"
                ),
                run.trajectory,
            )
    failures = [r for r in runs if r.error is not None]
    write_failures_csv(os.path.join(out, "failures.csv"), failures)
    if trajectories:
        write_summary_csv(
            os.path.join(out, "summary.csv"),
            summarize(trajectories, spec.late_window),
        )
    print(
        f"sweep complete: {len(runs)} runs "
        f"({len(runs) - len(failures)} ok, {len(failures)} failed) -> {out}"
    )
    return 1 if failures else 0


def _cmd_bounds(args) -> int:
    exp = _load(args)
    if not exp.constants_given:
        raise ConfigError(
            "bounds needs a [constants] section (alpha, L, epsilon, ...)"
        )
    b = exp.bounds
    cells = admissibility_grid(
        list(exp.sweep.lambdas), list(exp.sweep.gammas), b.constants
    )
    horizon = b.horizon if b.horizon is not None else exp.loop.generations
    bound_vals = [
        bound_trajectory(
            horizon, exp.loop.n, b.delta, b.theta0_dist, cell.lam, cell.gamma, b.constants
        )
        for cell in cells
    ]
    out = _out_dir(args, exp)
    path = os.path.join(out, "bounds.csv")
    write_bounds_csv(path, cells, bound_vals)
    print(f"bounds table: {len(cells)} cells at horizon {horizon} -> {path}")
    return 0


def _cmd_validate(_args) -> int:
    results = run_checks()
    for res in results:
        if res.ok:
            print(f"PASS {res.name}")
        else:
            print(f"FAIL {res.name}: {res.detail}")
    bad = sum(not r.ok for r in results)
    print(f"{len(results) - bad}/{len(results)} checks passed")
    return 1 if bad else 0


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    handlers = {
        "run": _cmd_run,
        "sweep": _cmd_sweep,
        "bounds": _cmd_bounds,
        "validate": _cmd_validate,
    }
    try:
        return handlers[args.command](args)
    except CorrloopError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
