"""Annealed Langevin posterior sampling for linear inverse problems.

Measurement model ``y = A x + N(0, eta^2 I)``; the sampler anneals through a
ladder of increasingly informative observations, running a short Langevin
mixing step at each rung.
"""

from .errors import (ConfigError, DivergenceError, RejectedInputError, SamplerError, ScheduleExplosionError,
                     UnsupportedSmoothingError)
from .evaluation import (GaussianSummary, chi_square_gaussians, energy_distance, energy_test,
                         gaussian_mgf_bound, gaussian_posterior_closed_form, kl_gaussians, laurent_massart_tail,
                         mi_tv_bound, tv_upper_bounds)
from .experiments import ExperimentSpec, run_experiment
from .langevin import (ChainState, StepPolicy, auto_step_size, euler_maruyama_run, plain_posterior_langevin,
                       reverse_diffusion_init, variance_curve)
from .measurement import CoupledObservations, MeasurementModel, build_coupled_ladder, simulate_measurement
from .priors import ConditionedPrior, GaussianMixture, GeneralGaussian, IsotropicGaussian, Prior, RingPrior
from .rng import ChainStreams, make_rng
from .samplers import RunArtifact, RunConfig, compressed_sensing, gaussian_sampler, posterior_sampler
from .schedule import (NoiseLadder, ScheduleParams, build_admissible_schedule, max_admissible_gamma,
                       validate_schedule)
from .scores import (ConditionedOracle, ExactOracle, ScoreOracle, ShellPerturbation, ShellPerturbedOracle,
                     conditional_gaussian_score, conditioned_smoothed_score, posterior_score, prior_score,
                     ring_hessian_eigs, shell_perturbed_oracle, smoothed_score)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
