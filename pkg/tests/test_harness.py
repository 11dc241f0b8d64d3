import json
import math

import numpy as np
import pytest

from moneat.criteria import ConfigurationError
from moneat.evolution import EvoParams
from moneat.genome import load_genome, minimal_genome
from moneat.harness import (DISTANCE_RANGE, TRAIN_BUDGET_FACTOR, WORLDS,
                            build_scenario_set, default_config, dumps_config,
                            evaluate_unseen, parse_config,
                            pareto_front_of_final, run_experiment,
                            sample_scenario, write_unseen_csv)
from moneat.simworld import (body_collides, dumps_scenario,
                             generate_environment, point_in_obstacle,
                             robot_spec, swarm_spec)


def tiny_config(tmp_path, framework="single", seed=21):
    cfg = default_config("swarm", framework, seed=seed)
    cfg.n_training_scenarios = 2
    cfg.criteria.n_scenarios = 2
    cfg.evo = EvoParams(pop_size=8, max_generations=3, add_node_prob=0.08,
                        add_edge_prob=0.5)
    cfg.output_dir = str(tmp_path / f"{framework}_{seed}")
    return cfg


class TestConfig:
    def test_defaults_per_robot(self):
        ugv = default_config("ugv")
        swarm = default_config("swarm")
        assert ugv.n_training_scenarios == 80
        assert swarm.n_training_scenarios == 20
        assert ugv.evo.add_node_prob == 0.05
        assert swarm.evo.add_node_prob == 0.08
        assert ugv.evo.add_edge_prob == 0.03
        assert swarm.evo.add_edge_prob == 0.5
        for cfg in (ugv, swarm):
            assert cfg.evo.pop_size == 100
            assert cfg.evo.max_generations == 50
            assert cfg.evo.elitist_fraction == 0.02
            assert cfg.evo.crossover_prob == 0.85
            assert cfg.evo.weight_mut_prob == 0.25

    def test_parse_overrides(self):
        text = """
        # comment
        robot=swarm
        framework=dual
        seed=9
        evo.pop_size=32
        speciation.compat_threshold=4.5
        criteria.max_experience_points=100
        """
        cfg = parse_config(text)
        assert cfg.robot == "swarm" and cfg.framework == "dual"
        assert cfg.seed == 9
        assert cfg.evo.pop_size == 32
        assert cfg.speciation.compat_threshold == 4.5
        assert cfg.criteria.max_experience_points == 100
        # untouched values keep robot defaults
        assert cfg.evo.add_edge_prob == 0.5

    def test_unknown_key_names_line(self):
        with pytest.raises(ConfigurationError, match="line 2.*banana"):
            parse_config("robot=ugv\nbanana=3\n")

    def test_bad_value_names_key(self):
        with pytest.raises(ConfigurationError, match="evo.pop_size"):
            parse_config("evo.pop_size=lots\n")

    def test_missing_equals(self):
        with pytest.raises(ConfigurationError, match="line 1"):
            parse_config("robot ugv\n")

    def test_dumps_parse_round_trip(self):
        cfg = default_config("swarm", "dual", seed=4)
        cfg.evo.pop_size = 12
        back = parse_config(dumps_config(cfg))
        assert back == cfg


class TestScenarioSet:
    def test_swarm_defaults(self):
        cfg = default_config("swarm")
        scen = build_scenario_set(cfg, np.random.default_rng(1))
        assert len(scen) == 20
        side = WORLDS["swarm"].arena_side
        assert scen[0].env.side == side
        spec = robot_spec("swarm")
        for sc in scen:
            sx, sy, sh = sc.start_pose
            d = math.dist((sx, sy), sc.goal)
            assert DISTANCE_RANGE[0] * side <= d <= DISTANCE_RANGE[1] * side
            assert not body_collides(spec, sc.env, sx, sy, sh)
            assert not point_in_obstacle(sc.env, *sc.goal)
            assert sc.time_budget == pytest.approx(
                TRAIN_BUDGET_FACTOR * d / spec.rated_velocity)
            assert sc.goal_tolerance == WORLDS["swarm"].train_tolerance

    def test_ugv_defaults(self):
        cfg = default_config("ugv")
        scen = build_scenario_set(cfg, np.random.default_rng(2))
        assert len(scen) == 80
        assert scen[0].env.side == 12.0

    def test_all_scenarios_share_environment(self):
        cfg = default_config("swarm")
        scen = build_scenario_set(cfg, np.random.default_rng(3))
        first = scen[0].env.obstacles
        for sc in scen[1:]:
            assert sc.env is scen[0].env or np.array_equal(
                sc.env.obstacles, first)

    def test_seeded_byte_equality(self):
        cfg = default_config("swarm")
        a = build_scenario_set(cfg, np.random.default_rng(4))
        b = build_scenario_set(cfg, np.random.default_rng(4))
        assert [dumps_scenario(x) for x in a] == \
               [dumps_scenario(x) for x in b]

    def test_impossible_placement_raises(self):
        spec = swarm_spec()
        env = generate_environment(5.0, 5, (0.15, 0.6),
                                   np.random.default_rng(5))
        with pytest.raises(ConfigurationError):
            sample_scenario(env, spec, 0.1, np.random.default_rng(6),
                            max_tries=0)


class TestRunExperiment:
    def test_artifacts_written_and_parse(self, tmp_path):
        cfg = tiny_config(tmp_path, "dual")
        run = run_experiment(cfg)
        out = run.output_dir
        for name in ("convergence.csv", "niche_history.csv",
                     "niche_targets.csv", "complexity_performance.csv",
                     "pareto_snapshots.csv", "pareto_front.csv",
                     "champion.txt", "config.txt", "run_meta.json"):
            assert (out / name).exists(), name
        assert len(list((out / "scenarios").glob("*.txt"))) == 2
        assert len(list((out / "elites").glob("*.txt"))) >= 1

        conv = (out / "convergence.csv").read_text().splitlines()
        assert conv[0] == ("generation,best_F,mean_F,best_G,mean_G,"
                           "n_niches,max_niche_frac")
        assert len(conv) == 1 + cfg.evo.max_generations

        meta = json.loads((out / "run_meta.json").read_text())
        assert meta["rollouts"] == 8 * 3 * 2
        champ = load_genome(out / "champion.txt")
        assert champ.n_inputs == 6

    def test_niche_fractions_sum_to_one(self, tmp_path):
        run = run_experiment(tiny_config(tmp_path, "single", seed=31))
        rows = (run.output_dir / "niche_history.csv").read_text().splitlines()
        per_gen: dict[str, float] = {}
        for line in rows[1:]:
            gen, _nid, _members, frac = line.split(",")
            per_gen[gen] = per_gen.get(gen, 0.0) + float(frac)
        assert per_gen
        for total in per_gen.values():
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_single_and_dual_use_equal_rollouts(self, tmp_path):
        single = run_experiment(tiny_config(tmp_path, "single", seed=41))
        dual = run_experiment(tiny_config(tmp_path, "dual", seed=41))
        assert single.n_rollouts == dual.n_rollouts
        assert (single.evolution.n_genome_evaluations
                == dual.evolution.n_genome_evaluations)

    def test_rerun_byte_identical(self, tmp_path):
        cfg_a = tiny_config(tmp_path, "dual", seed=51)
        cfg_b = tiny_config(tmp_path, "dual", seed=51)
        cfg_b.output_dir = str(tmp_path / "second")
        run_a = run_experiment(cfg_a)
        run_b = run_experiment(cfg_b)
        for name in ("convergence.csv", "niche_history.csv",
                     "pareto_front.csv", "champion.txt"):
            assert (run_a.output_dir / name).read_bytes() == \
                   (run_b.output_dir / name).read_bytes()

    def test_pareto_front_file_nondominated(self, tmp_path):
        run = run_experiment(tiny_config(tmp_path, "dual", seed=61))
        rows = (run.output_dir / "pareto_front.csv").read_text().splitlines()
        pts = [(float(r.split(",")[2]), float(r.split(",")[3]))
               for r in rows[1:]]
        assert pts
        for a in pts:
            for b in pts:
                if a == b:
                    continue
                assert not (a[0] >= b[0] and a[1] >= b[1]
                            and (a[0] > b[0] or a[1] > b[1]))

    def test_output_root_env_override(self, tmp_path, monkeypatch):
        monkeypatch.setenv("MONEAT_OUTPUT_ROOT", str(tmp_path / "root"))
        cfg = tiny_config(tmp_path, "single", seed=71)
        cfg.output_dir = "nested/run"
        run = run_experiment(cfg)
        assert run.output_dir == tmp_path / "root" / "nested" / "run"
        assert (run.output_dir / "convergence.csv").exists()


class TestEvaluateUnseen:
    def test_report_shape_and_determinism(self, tmp_path):
        spec = swarm_spec()
        g = minimal_genome(6, 2, np.random.default_rng(0))
        a = evaluate_unseen(g, spec, n_trials=10,
                            rng=np.random.default_rng(5))
        b = evaluate_unseen(g, spec, n_trials=10,
                            rng=np.random.default_rng(5))
        assert len(a.trials) == 10
        assert a.n_success == b.n_success
        assert [(t.success, t.elapsed, t.final_distance)
                for t in a.trials] == \
               [(t.success, t.elapsed, t.final_distance) for t in b.trials]
        assert a.budget == 50.0
        out = tmp_path / "unseen.csv"
        write_unseen_csv(a, out)
        lines = out.read_text().splitlines()
        assert lines[0] == "trial,success,elapsed,final_distance,outcome"
        assert len(lines) == 11

    def test_unseen_layout_differs_from_training(self):
        cfg = default_config("swarm")
        scen = build_scenario_set(cfg, np.random.default_rng(8))
        spec = swarm_spec()
        g = minimal_genome(6, 2, np.random.default_rng(0))
        report = evaluate_unseen(g, spec, n_trials=2,
                                 rng=np.random.default_rng(9))
        assert report.tolerance != WORLDS["swarm"].train_tolerance
        assert scen[0].env.side == 5.0 and WORLDS["swarm"].unseen_side == 4.0

    def test_io_mismatch_rejected(self):
        spec = swarm_spec()
        wrong = minimal_genome(11, 2, np.random.default_rng(0))
        with pytest.raises(ConfigurationError):
            evaluate_unseen(wrong, spec, 3, np.random.default_rng(1))


class TestParetoOfFinal:
    def test_front_mutually_nondominated(self, tmp_path):
        run = run_experiment(tiny_config(tmp_path, "single", seed=81))
        front = pareto_front_of_final(run.output_dir)
        assert front
        for _, fa, ga, _c in front:
            for _, fb, gb, _c2 in front:
                if (fa, ga) == (fb, gb):
                    continue
                assert not (fb >= fa and gb >= ga
                            and (fb > fa or gb > ga))
