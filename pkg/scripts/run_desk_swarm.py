#!/usr/bin/env python
"""Desk-scale demo: train the swarm robot with both frameworks on a
small budget, then test each champion on a fresh unseen arena.

Runs in a couple of minutes; artifacts land under runs/desk/.
"""

from __future__ import annotations

import argparse

import numpy as np

from moneat.evolution import EvoParams
from moneat.harness import default_config, evaluate_unseen, run_experiment
from moneat.simworld import swarm_spec


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seed", type=int, default=1)
    parser.add_argument("--output", default="runs/desk")
    args = parser.parse_args()

    spec = swarm_spec()
    for framework in ("single", "dual"):
        cfg = default_config("swarm", framework, seed=args.seed)
        cfg.n_training_scenarios = 10
        cfg.criteria.n_scenarios = 10
        cfg.evo = EvoParams(pop_size=50, max_generations=25,
                            add_node_prob=0.08, add_edge_prob=0.5)
        cfg.output_dir = f"{args.output}/swarm_{framework}_seed{args.seed}"
        run = run_experiment(cfg)
        first = run.evolution.generations[0]
        last = run.evolution.generations[-1]
        print(f"[{framework}] best F {first.best_F:.3f} -> {last.best_F:.3f} "
              f"over {len(run.evolution.generations)} generations "
              f"({run.n_rollouts} rollouts, {run.wall_clock:.0f}s)")
        report = evaluate_unseen(run.evolution.champion, spec, n_trials=10,
                                 rng=np.random.default_rng(args.seed))
        print(f"[{framework}] unseen: {report.n_success}/10 successes "
              f"(tolerance {report.tolerance:.3f} m, budget "
              f"{report.budget:.0f} s)")
        print(f"[{framework}] artifacts: {run.output_dir}")


if __name__ == "__main__":
    main()
