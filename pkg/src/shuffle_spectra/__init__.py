"""Semi-random transposition shuffles: simulation, spectra, and the
numerical verification of their mixing-time analysis."""

__version__ = "0.1.0"

from .coupling import (CoupledState, PairStats, coupled_step,
                       pair_correlation_check, run_coupling)
from .engine import (KernelEnsemble, StepRecord, Trajectory, from_renewal_frame,
                     renewal_step, run_renewal, run_shuffle, to_renewal_frame,
                     transpose_step)
from .exact import (ExactDistribution, MixingResult, exact_mixing_time,
                    perm_rank, perm_unrank, step_kernel, tv_to_uniform)
from .experiments import (ConfigError, list_experiments, run_experiment)
from .marking import (EpochStats, MarkingState, UniformTimeResult, epoch_stats,
                      marking_step, run_until_uniform_time, theta_constants)
from .permutation import Permutation
from .rules import ShuffleRule, make_rule, rule_location
from .spectral import (Eigenfunction, RootSolveError, SpectralPair,
                       all_gamma_roots, eigen_residual, eigenfunction,
                       renewal_matrix, renewal_row, solve_gamma, solve_zeta,
                       special_eigenvectors)
from .statistic import (MomentReport, TestStatistic, distinguisher_advantage,
                        evaluate_F, moment_experiment, predicted_mean,
                        second_moment_bound, stationary_second_moment,
                        tv_lower_bound)
