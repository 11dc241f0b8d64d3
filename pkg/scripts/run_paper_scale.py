#!/usr/bin/env python
"""Full-scale training matrix: both robots x both frameworks at the
default parameters (population 100, 50 generations, 80 UGV / 20 swarm
scenarios), followed by the unseen-environment protocol for every
champion.  Expect tens of minutes of compute.
"""

from __future__ import annotations

import argparse

import numpy as np

from moneat.harness import default_config, evaluate_unseen, run_experiment
from moneat.simworld import robot_spec


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--output", default="runs/full")
    parser.add_argument("--robot", choices=["ugv", "swarm", "both"],
                        default="both")
    args = parser.parse_args()

    robots = ["ugv", "swarm"] if args.robot == "both" else [args.robot]
    for robot in robots:
        for framework in ("single", "dual"):
            cfg = default_config(robot, framework, seed=args.seed)
            cfg.output_dir = f"{args.output}/{robot}_{framework}_seed{args.seed}"
            run = run_experiment(cfg)
            last = run.evolution.generations[-1]
            print(f"[{robot}/{framework}] final best F {last.best_F:.3f}, "
                  f"mean F {last.mean_F:.3f}, {last.n_niches} niches, "
                  f"{run.wall_clock:.0f}s -> {run.output_dir}")
            report = evaluate_unseen(run.evolution.champion,
                                     robot_spec(robot), n_trials=10,
                                     rng=np.random.default_rng(args.seed))
            print(f"[{robot}/{framework}] unseen successes: "
                  f"{report.n_success}/10")


if __name__ == "__main__":
    main()
