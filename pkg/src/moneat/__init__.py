"""Multi-objective neuroevolution of network topologies, with a bundled
deterministic 2D robot-navigation world and experiment harness."""

from .criteria import (ConfigurationError, CriteriaConfig, ScenarioResult,
                       experience_gain, experience_union, mst_total_weight,
                       performance_scenario, performance_total)
from .evolution import (EvolutionRecord, EvoParams, Niche, Population,
                        SpeciationParams, crossover, crowding_distance,
                        distance, evolve_generation, initial_population,
                        mutate, nondominated_sort, resize_niches,
                        run_dual_stage, run_single_stage,
                        select_parents_global, select_parents_intra, speciate)
from .genome import (Gene, Genome, InvalidGenomeError, NodeSpec, ShapeError,
                     activate, complexity, load_genome, minimal_genome,
                     save_genome, validate)
from .harness import (ExperimentConfig, RunRecord, UnseenReport,
                      build_scenario_set, default_config, evaluate_unseen,
                      load_config, parse_config, run_experiment)
from .simworld import (Environment, RobotSpec, RobotState, Scenario,
                       apply_action, generate_environment, load_scenario,
                       network_inputs, robot_spec, save_scenario, sense,
                       simulate_scenario, swarm_spec, ugv_spec)

__version__ = "0.1.0"
