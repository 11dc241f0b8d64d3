"""Command-line entry points.

Subcommands: train (run an experiment from a config file), evaluate
(unseen-environment trials for a stored genome), pareto (emit a run's
front as CSV), complexity (score a stored genome), gen-scenarios (write
a scenario set without training).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .criteria import ConfigurationError
from .genome import complexity, load_genome
from .harness import (build_scenario_set, evaluate_unseen, load_config,
                      pareto_front_of_final, resolve_output_dir,
                      run_experiment, write_unseen_csv)
from .simworld import robot_spec, save_scenario


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="moneat",
        description="Multi-objective neuroevolution for 2D robot navigation")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run an experiment from a config")
    p_train.add_argument("--config", required=True, type=Path)
    p_train.add_argument("--seed", type=int, default=None,
                         help="override the config seed")
    p_train.add_argument("--output", type=Path, default=None,
                         help="override the config output directory")

    p_eval = sub.add_parser("evaluate",
                            help="test a stored genome on unseen layouts")
    p_eval.add_argument("--genome", required=True, type=Path)
    p_eval.add_argument("--robot", required=True)
    p_eval.add_argument("--trials", type=int, default=10)
    p_eval.add_argument("--seed", type=int, default=0)
    p_eval.add_argument("--output", type=Path, default=None,
                        help="also write the report as CSV")

    p_pareto = sub.add_parser("pareto", help="emit a run's front as CSV")
    p_pareto.add_argument("--run", required=True, type=Path)

    p_cx = sub.add_parser("complexity",
                          help="relative forward-pass cost of a genome")
    p_cx.add_argument("--genome", required=True, type=Path)

    p_gen = sub.add_parser("gen-scenarios",
                           help="write a scenario set without training")
    p_gen.add_argument("--config", required=True, type=Path)
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--output", type=Path, default=None)
    return parser


def _cmd_train(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.output is not None:
        cfg.output_dir = str(args.output)
    run = run_experiment(cfg)
    last = run.evolution.generations[-1]
    print(f"run complete: {len(run.evolution.generations)} generations, "
          f"{run.n_rollouts} rollouts, best F {last.best_F:.6g}")
    print(f"artifacts in {run.output_dir}")
    return 0


def _cmd_evaluate(args) -> int:
    genome = load_genome(args.genome)
    spec = robot_spec(args.robot)
    report = evaluate_unseen(genome, spec, n_trials=args.trials,
                             rng=np.random.default_rng(args.seed))
    for t in report.trials:
        print(f"trial {t.trial}: {'success' if t.success else 'failure'} "
              f"({t.outcome}), elapsed {t.elapsed:.3f}s, "
              f"final distance {t.final_distance:.4f} m")
    print(f"successes: {report.n_success}/{report.n_trials}")
    if args.output is not None:
        write_unseen_csv(report, args.output)
        print(f"report written to {args.output}")
    return 0


def _cmd_pareto(args) -> int:
    front_file = Path(args.run) / "pareto_front.csv"
    if front_file.exists():
        sys.stdout.write(front_file.read_text(encoding="ascii"))
        return 0
    front = pareto_front_of_final(args.run)
    print("genome_id,F,G,complexity")
    for gid, f_val, g_val, comp in front:
        print(f"{gid},{f_val:.17g},{g_val:.17g},{comp:.17g}")
    return 0


def _cmd_complexity(args) -> int:
    print(complexity(load_genome(args.genome)))
    return 0


def _cmd_gen_scenarios(args) -> int:
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.seed = args.seed
    if args.output is not None:
        cfg.output_dir = str(args.output)
    out = resolve_output_dir(cfg) / "scenarios"
    out.mkdir(parents=True, exist_ok=True)
    seed_scen, _ = np.random.SeedSequence(cfg.seed).spawn(2)
    scenarios = build_scenario_set(cfg, np.random.default_rng(seed_scen))
    for i, sc in enumerate(scenarios):
        save_scenario(sc, out / f"scenario_{i:03d}.txt")
    print(f"wrote {len(scenarios)} scenarios to {out}")
    return 0


_COMMANDS = {
    "train": _cmd_train,
    "evaluate": _cmd_evaluate,
    "pareto": _cmd_pareto,
    "complexity": _cmd_complexity,
    "gen-scenarios": _cmd_gen_scenarios,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ConfigurationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc.filename}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
