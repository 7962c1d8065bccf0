"""Command-line entry point for running benchmark trials."""

from __future__ import annotations

import argparse
import sys

from .context import load_world
from .executive import (ALGORITHMS, RunConfig, aggregate, format_aggregate,
                        make_planner, run_trial, write_metrics_csv)
from .simulation import TASK_GOALS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plan",
        description="Plan and execute kitchen manipulation tasks under "
                    "state uncertainty.")
    parser.add_argument("--task", default="retrieve", choices=sorted(TASK_GOALS))
    parser.add_argument("--alg", default="shycobra", choices=ALGORITHMS)
    parser.add_argument("--trials", type=int, default=1)
    parser.add_argument("--samples", type=int, default=100,
                        help="particles per network variable")
    parser.add_argument("--iterations", type=int, default=10,
                        help="message-passing iteration cap")
    parser.add_argument("--noise-pose", type=float, default=0.10,
                        help="pose observation noise std (m)")
    parser.add_argument("--noise-config", type=float, default=0.25,
                        help="configuration estimate noise std (rad)")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--world", default=None,
                        help="world JSON file (defaults to the packaged kitchen)")
    parser.add_argument("--out", default=None,
                        help="write per-trial metrics CSV to this path")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    model = load_world(args.world)
    planner = make_planner(model)
    metrics = []
    traj_cache: dict = {}
    for trial in range(args.trials):
        cfg = RunConfig(task=args.task, alg=args.alg, seed=args.seed + trial,
                        samples=args.samples, iterations=args.iterations,
                        noise_pose=args.noise_pose,
                        noise_config=args.noise_config)
        m = run_trial(cfg, trial=trial, model=model, planner=planner,
                      traj_cache=traj_cache)
        metrics.append(m)
        print(f"trial {trial}: success={int(m.success)} "
              f"errors={m.num_errors} replans={m.replans} "
              f"planning_time_s={m.planning_time_s:.3f}")
    if args.out:
        write_metrics_csv(metrics, args.out)
        print(f"wrote {args.out}")
    print(format_aggregate(aggregate(metrics)))
    return 0


if __name__ == "__main__":
    sys.exit(main())
