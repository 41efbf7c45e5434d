"""Experiment laboratory for online allocation with re-solved dual prices."""

__version__ = "0.1.0"

from .algos import (PolicySpec, run_fixed_price, run_greedy_accept,
                    run_one_shot_single_sample, run_oracle_offline_price,
                    run_policy, run_resolve_single_sample)
from .analysis import (ExitStats, FitResult, RegretEstimate,
                       StateDeviationResult, calibrate_eps_d,
                       dual_convergence_curve, estimate_regret, fit_scaling,
                       state_deviation_paths, z_field_probe)
from .config import AnalysisToggles, ConfigError, ExperimentConfig, load_config, parse_config
from .core import (Instance, Order, RunRecord, Trajectory, trajectory_from_run,
                   validate_instance, validate_run_record)
from .gens import (Bounds, GeneratorSpec, PopulationPrice, delta_path,
                   density_f, density_v, make_generator, nondegeneracy_estimate,
                   population_price, sample_instance, sample_order,
                   validate_generator)
from .lp import (DualSolution, PrimalSolution, SolverFailure, accept_decision,
                 dual_objective, dual_subgradient, solve_dual_breakpoint,
                 solve_dual_simplex, solve_offline_fractional)
from .streams import OrderStream, generator_for, stream_key
