"""Non-elitist genetic algorithms with level-based runtime bounds.

The package has three layers: a generation-loop engine that samples every
offspring of a generation independently from the current population
(``engine``), a closed-form theory layer that evaluates the level-based
expected-runtime bounds and the selection/crossover/mutation constants they
compose from (``bounds``), and an estimator layer that verifies the bounds'
conditions empirically or by exhaustive enumeration (``estimators``).
"""

from .bounds import (BoundReport, LevelProbabilities, PresetOutcome, SelectionThreshold,
                     benchmark_level_prob, benchmark_level_probs, finite_n_floor,
                     ga_bound, level_bound, preset_config, selection_threshold)
from .config import GAConfig, parse_config, render_argv, render_spec
from .engine import (Population, RunResult, evolve_generation, init_population,
                     run_until_target, sample_offspring, sample_offspring_batch)
from .errors import ConfigError
from .estimators import (ConditionRecord, ConditionReport, CrossoverCheck, Estimate,
                         UpgradeEstimates, check_crossover_property, condition_report,
                         conditioning_population, discrete_pressure,
                         estimate_selective_pressure, estimate_upgrade_probabilities,
                         exact_selective_pressure, level_representative, ranked_population)
from .experiment import (ExperimentStats, bound_vs_empirical_report, emit_results,
                         render_results, run_replicates)
from .operators import (CrossoverSpec, MutationSpec, SelectionMechanism,
                        crossover_two_offspring, crossover_two_offspring_perm,
                        gated_crossover, mutate_bitwise, mutate_exchange,
                        one_offspring_crossover, select_index, selective_pressure,
                        selective_pressure_floor)
from .problems import (LevelPartition, ProblemSpec, canonical_partition, evaluate,
                       evaluate_batch)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
