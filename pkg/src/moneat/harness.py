"""Experiment orchestration: configs, scenario sets, runs, reports.

A run is fully determined by (config, seed): the seed fans out into one
stream for world generation and one for evolution, every stochastic
draw comes from those streams, and all emitted artifacts except timing
metadata are byte-reproducible.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .criteria import ConfigurationError, CriteriaConfig
from .evolution import (EvolutionRecord, EvoParams, SpeciationParams,
                        make_scenario_evaluator, nondominated_sort,
                        run_dual_stage, run_single_stage)
from .genome import Genome, complexity, save_genome
from .simworld import (Environment, Scenario, body_collides,
                       generate_environment, point_in_obstacle, robot_spec,
                       save_scenario, simulate_scenario)

OUTPUT_ROOT_ENV = "MONEAT_OUTPUT_ROOT"

# Training budgets are a multiple of the straight-line time; unseen
# evaluations run against a fixed wall-clock budget instead.
TRAIN_BUDGET_FACTOR = 3.0
UNSEEN_BUDGET_SECONDS = 50.0
UNSEEN_TRIALS = 10
# Start/goal separation as a fraction of the arena side.
DISTANCE_RANGE = (0.3, 0.9)


@dataclass(frozen=True)
class WorldSettings:
    arena_side: float
    unseen_side: float
    n_per_grid: int
    size_range: tuple[float, float]
    train_tolerance: float
    unseen_tolerance: float


WORLDS = {
    "ugv": WorldSettings(arena_side=12.0, unseen_side=12.0, n_per_grid=5,
                         size_range=(0.3, 1.5), train_tolerance=0.5,
                         unseen_tolerance=1.0),
    # Unseen tolerance scales the UGV's 1 m by the arena-side ratio.
    "swarm": WorldSettings(arena_side=5.0, unseen_side=4.0, n_per_grid=5,
                           size_range=(0.15, 0.6), train_tolerance=0.1,
                           unseen_tolerance=1.0 * 4.0 / 12.0),
}

# Per-robot structural mutation rates and training-set sizes.
ROBOT_DEFAULTS = {
    "ugv": {"add_node_prob": 0.05, "add_edge_prob": 0.03, "n_scenarios": 80},
    "swarm": {"add_node_prob": 0.08, "add_edge_prob": 0.5, "n_scenarios": 20},
}


@dataclass
class ExperimentConfig:
    robot: str = "ugv"
    framework: str = "single"  # single | dual
    seed: int = 0
    n_training_scenarios: int = 80
    output_dir: str = "run"
    evo: EvoParams = field(default_factory=EvoParams)
    criteria: CriteriaConfig = field(default_factory=CriteriaConfig)
    speciation: SpeciationParams = field(default_factory=SpeciationParams)


def default_config(robot: str, framework: str = "single",
                   seed: int = 0) -> ExperimentConfig:
    robot = robot.lower()
    if robot not in ROBOT_DEFAULTS:
        raise ConfigurationError(f"unknown robot {robot!r}")
    if framework not in ("single", "dual"):
        raise ConfigurationError(f"unknown framework {framework!r}")
    rd = ROBOT_DEFAULTS[robot]
    evo = EvoParams(add_node_prob=rd["add_node_prob"],
                    add_edge_prob=rd["add_edge_prob"])
    return ExperimentConfig(
        robot=robot, framework=framework, seed=seed,
        n_training_scenarios=rd["n_scenarios"],
        output_dir=f"run_{robot}_{framework}_seed{seed}",
        evo=evo,
        criteria=CriteriaConfig(n_scenarios=rd["n_scenarios"]),
        speciation=SpeciationParams())


# Flat key=value config text with dotted sections, e.g. evo.pop_size=100.
_CONFIG_SCHEMA: dict[str, type] = {
    "robot": str,
    "framework": str,
    "seed": int,
    "n_training_scenarios": int,
    "output_dir": str,
    "evo.pop_size": int,
    "evo.max_generations": int,
    "evo.elitist_fraction": float,
    "evo.crossover_prob": float,
    "evo.weight_mut_prob": float,
    "evo.add_node_prob": float,
    "evo.add_edge_prob": float,
    "criteria.alpha": float,
    "criteria.max_experience_points": int,
    "speciation.c1": float,
    "speciation.c2": float,
    "speciation.c3": float,
    "speciation.compat_threshold": float,
}


def parse_config(text: str) -> ExperimentConfig:
    """Parse flat key=value config text.  Unknown keys and unparsable
    values raise with the offending line number and key."""
    entries: list[tuple[int, str, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(
                f"config line {lineno}: expected key=value, got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_SCHEMA:
            raise ConfigurationError(
                f"config line {lineno}: unknown key {key!r}")
        entries.append((lineno, key, value))

    overrides: dict[str, object] = {}
    for lineno, key, value in entries:
        typ = _CONFIG_SCHEMA[key]
        try:
            overrides[key] = typ(value)
        except ValueError:
            raise ConfigurationError(
                f"config line {lineno}: key {key!r} expects "
                f"{typ.__name__}, got {value!r}")

    robot = str(overrides.get("robot", "ugv")).lower()
    framework = str(overrides.get("framework", "single"))
    cfg = default_config(robot, framework, int(overrides.get("seed", 0)))
    if "output_dir" in overrides:
        cfg.output_dir = str(overrides["output_dir"])
    if "n_training_scenarios" in overrides:
        cfg.n_training_scenarios = int(overrides["n_training_scenarios"])
        cfg.criteria.n_scenarios = cfg.n_training_scenarios
    for key, value in overrides.items():
        if "." not in key:
            continue
        section, name = key.split(".", 1)
        setattr(getattr(cfg, section), name, value)
    return cfg


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())


def dumps_config(cfg: ExperimentConfig) -> str:
    lines = [
        f"robot={cfg.robot}",
        f"framework={cfg.framework}",
        f"seed={cfg.seed}",
        f"n_training_scenarios={cfg.n_training_scenarios}",
        f"output_dir={cfg.output_dir}",
    ]
    for section in ("evo", "criteria", "speciation"):
        obj = getattr(cfg, section)
        for f in dataclasses.fields(obj):
            if f"{section}.{f.name}" in _CONFIG_SCHEMA:
                lines.append(f"{section}.{f.name}={getattr(obj, f.name)}")
    return "\n".join(lines) + "\n"


def sample_scenario(env: Environment, spec, tolerance: float,
                    rng: np.random.Generator,
                    budget_seconds: float | None = None,
                    max_tries: int = 1000) -> Scenario:
    """Draw a collision-free start pose and free goal point with their
    separation inside DISTANCE_RANGE of the arena side."""
    side = env.side
    lo = DISTANCE_RANGE[0] * side
    hi = DISTANCE_RANGE[1] * side
    for _ in range(max_tries):
        sx = float(rng.uniform(0.0, side))
        sy = float(rng.uniform(0.0, side))
        sh = float(rng.uniform(-math.pi, math.pi))
        gx = float(rng.uniform(0.0, side))
        gy = float(rng.uniform(0.0, side))
        d = math.sqrt((gx - sx) ** 2 + (gy - sy) ** 2)
        if not lo <= d <= hi:
            continue
        if body_collides(spec, env, sx, sy, sh):
            continue
        if point_in_obstacle(env, gx, gy):
            continue
        budget = (budget_seconds if budget_seconds is not None
                  else TRAIN_BUDGET_FACTOR * d / spec.rated_velocity)
        return Scenario(env=env, start_pose=(sx, sy, sh), goal=(gx, gy),
                        time_budget=budget, goal_tolerance=tolerance)
    raise ConfigurationError(
        f"could not place a collision-free start/goal pair in {max_tries} tries")


def build_scenario_set(cfg: ExperimentConfig,
                       rng: np.random.Generator) -> list[Scenario]:
    """One generated environment per config seed family, with the
    configured number of start/goal pairs inside it."""
    spec = robot_spec(cfg.robot)
    world = WORLDS[cfg.robot]
    env = generate_environment(world.arena_side, world.n_per_grid,
                               world.size_range, rng)
    return [sample_scenario(env, spec, world.train_tolerance, rng)
            for _ in range(cfg.n_training_scenarios)]


# --- run records and artifact emission ---------------------------------------

@dataclass
class RunRecord:
    config: ExperimentConfig
    evolution: EvolutionRecord
    scenarios: list[Scenario]
    output_dir: Path
    n_rollouts: int
    wall_clock: float


def resolve_output_dir(cfg: ExperimentConfig) -> Path:
    root = os.environ.get(OUTPUT_ROOT_ENV)
    path = Path(cfg.output_dir)
    if root and not path.is_absolute():
        path = Path(root) / path
    return path


def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_convergence_csv(record: EvolutionRecord, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("generation,best_F,mean_F,best_G,mean_G,"
                 "n_niches,max_niche_frac\n")
        for s in record.generations:
            fh.write(f"{s.generation},{_fmt(s.best_F)},{_fmt(s.mean_F)},"
                     f"{_fmt(s.best_G)},{_fmt(s.mean_G)},{s.n_niches},"
                     f"{_fmt(s.max_niche_frac)}\n")


def write_niche_history_csv(record: EvolutionRecord, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("generation,niche_id,members,fraction\n")
        for s in record.generations:
            total = sum(s.niche_sizes.values())
            for nid in sorted(s.niche_sizes):
                fh.write(f"{s.generation},{nid},{s.niche_sizes[nid]},"
                         f"{_fmt(s.niche_sizes[nid] / total)}\n")


def write_niche_targets_csv(record: EvolutionRecord, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("generation,niche_id,target\n")
        for s in record.generations:
            if s.niche_targets is None:
                continue
            for nid in sorted(s.niche_targets):
                fh.write(f"{s.generation},{nid},{s.niche_targets[nid]}\n")


def write_pareto_csv(entries, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("generation,genome_id,F,G,complexity\n")
        for e in entries:
            fh.write(f"{e.generation},{e.genome_id},{_fmt(e.F)},"
                     f"{_fmt(e.G)},{_fmt(e.complexity)}\n")


def write_complexity_csv(record: EvolutionRecord, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("genome_id,complexity,F,G\n")
        for g in record.final_population.genomes:
            fh.write(f"{g.id},{_fmt(complexity(g))},"
                     f"{_fmt(g.objectives[0])},{_fmt(g.objectives[1])}\n")


def run_experiment(cfg: ExperimentConfig) -> RunRecord:
    """Build the scenario set, run the configured framework, and write
    every artifact (scenarios, metrics CSVs, Pareto CSVs, elite and
    champion genomes, config snapshot) under the output directory."""
    t0 = time.perf_counter()
    spec = robot_spec(cfg.robot)
    out = resolve_output_dir(cfg)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scenarios").mkdir(exist_ok=True)

    seed_scen, seed_evo = np.random.SeedSequence(cfg.seed).spawn(2)
    scenarios = build_scenario_set(cfg, np.random.default_rng(seed_scen))
    for i, sc in enumerate(scenarios):
        save_scenario(sc, out / "scenarios" / f"scenario_{i:03d}.txt")

    cfg.criteria.n_scenarios = len(scenarios)
    evaluator = make_scenario_evaluator(spec, scenarios, cfg.criteria)
    driver = run_dual_stage if cfg.framework == "dual" else run_single_stage
    record = driver(cfg.evo, scenarios, spec,
                    np.random.default_rng(seed_evo),
                    speciation=cfg.speciation, criteria_cfg=cfg.criteria,
                    evaluator=evaluator)

    write_convergence_csv(record, out / "convergence.csv")
    write_niche_history_csv(record, out / "niche_history.csv")
    write_niche_targets_csv(record, out / "niche_targets.csv")
    write_complexity_csv(record, out / "complexity_performance.csv")
    if record.pareto_snapshots:
        write_pareto_csv(record.pareto_snapshots, out / "pareto_snapshots.csv")
        write_pareto_csv(record.pareto_front, out / "pareto_front.csv")
    save_genome(record.champion, out / "champion.txt")
    elite_dir = out / "elites"
    elite_dir.mkdir(exist_ok=True)
    n_elites = max(1, round(cfg.evo.elitist_fraction * cfg.evo.pop_size))
    final = sorted(record.final_population.genomes,
                   key=lambda g: (-g.objectives[0], g.id))
    for g in final[:n_elites]:
        save_genome(g, elite_dir / f"genome_{g.id}.txt")
    with open(out / "config.txt", "w", encoding="ascii") as fh:
        fh.write(dumps_config(cfg))

    wall = time.perf_counter() - t0
    meta = {
        "seed": cfg.seed,
        "robot": cfg.robot,
        "framework": cfg.framework,
        "n_scenarios": len(scenarios),
        "genome_evaluations": record.n_genome_evaluations,
        "rollouts": evaluator.calls["rollouts"],
        "generations": len(record.generations),
        "wall_clock_seconds": wall,
    }
    with open(out / "run_meta.json", "w", encoding="ascii") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return RunRecord(config=cfg, evolution=record, scenarios=scenarios,
                     output_dir=out, n_rollouts=evaluator.calls["rollouts"],
                     wall_clock=wall)


# --- unseen-environment evaluation -------------------------------------------

@dataclass
class UnseenTrial:
    trial: int
    success: bool
    elapsed: float
    final_distance: float
    outcome: str


@dataclass
class UnseenReport:
    robot: str
    n_trials: int
    n_success: int
    budget: float
    tolerance: float
    trials: list[UnseenTrial]


def evaluate_unseen(champion: Genome, spec, n_trials: int = UNSEEN_TRIALS,
                    rng: np.random.Generator | None = None) -> UnseenReport:
    """Test a champion on a freshly generated arena it never trained on:
    new obstacle layout and sizes, fixed 50 s budget, per-robot goal
    tolerance, start/goal separation in the training range."""
    if champion.n_inputs != spec.n_inputs or champion.n_outputs != 2:
        raise ConfigurationError(
            f"genome I/O ({champion.n_inputs}/{champion.n_outputs}) does not "
            f"match robot {spec.name!r} ({spec.n_inputs}/2)")
    rng = rng if rng is not None else np.random.default_rng(0)
    world = WORLDS[spec.name]
    env = generate_environment(world.unseen_side, world.n_per_grid,
                               world.size_range, rng)
    trials = []
    for k in range(n_trials):
        sc = sample_scenario(env, spec, world.unseen_tolerance, rng,
                             budget_seconds=UNSEEN_BUDGET_SECONDS)
        res = simulate_scenario(champion, spec, sc)
        trials.append(UnseenTrial(trial=k, success=res.success,
                                  elapsed=res.elapsed,
                                  final_distance=res.final_distance,
                                  outcome=res.outcome))
    return UnseenReport(robot=spec.name, n_trials=n_trials,
                        n_success=sum(t.success for t in trials),
                        budget=UNSEEN_BUDGET_SECONDS,
                        tolerance=world.unseen_tolerance, trials=trials)


def write_unseen_csv(report: UnseenReport, path) -> None:
    with open(path, "w", encoding="ascii") as fh:
        fh.write("trial,success,elapsed,final_distance,outcome\n")
        for t in report.trials:
            fh.write(f"{t.trial},{int(t.success)},{_fmt(t.elapsed)},"
                     f"{_fmt(t.final_distance)},{t.outcome}\n")


def pareto_front_of_final(record_dir: Path) -> list[tuple[int, float, float, float]]:
    """Non-dominated (F, G) front of a stored run's final population,
    read back from its complexity/performance table."""
    rows = []
    with open(Path(record_dir) / "complexity_performance.csv",
              encoding="ascii") as fh:
        header = fh.readline()
        if header.strip() != "genome_id,complexity,F,G":
            raise ConfigurationError(
                f"unexpected complexity_performance.csv header: {header!r}")
        for line in fh:
            gid, comp, f_val, g_val = line.strip().split(",")
            rows.append((int(gid), float(comp), float(f_val), float(g_val)))
    if not rows:
        return []
    ranks = nondominated_sort([(r[2], r[3]) for r in rows])
    return [(r[0], r[2], r[3], r[1])
            for r, rank in zip(rows, ranks) if rank == 1]
