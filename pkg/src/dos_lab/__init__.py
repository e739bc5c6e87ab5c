"""Distributed opportunistic scheduling under noisy channel estimation.

Analytic threshold/backoff solvers plus a seedable Monte Carlo
renewal-reward simulator that validates them.
"""

from .channel import (ChannelParams, ContentionParams, RngStream,
                      beta_from_training, conditional_snr_density,
                      contention_success_prob, expected_rate_bar,
                      sample_contention, sample_error, sample_estimate,
                      success_prob_given_estimate)
from .errors import (BracketError, ConvergenceError, DomainError,
                     EvaluationError, PolicyError, SolverError,
                     StarvationError)
from .sim import SimConfig, SimReport, run_replications, run_simulation
from .specfun import (DEFAULT_TOL, Tolerance, exp_integral_e1, find_root,
                      maximize_1d, scaled_e1)
from .threshold import (GeneralBackoffPolicy, LinearBackoffPolicy,
                        PerfectCsiPolicy, SolverTrace, TrainingPoint,
                        dinkelbach_u, dinkelbach_v, lambda_hat_prime_linear,
                        optimize_backoff, optimize_perfect_csi, phi_general,
                        phi_linear, phi_perfect_csi, solve_fixed_point_general,
                        solve_fixed_point_linear, solve_perfect_csi,
                        sweep_training_time, throughput_gain,
                        throughput_gain_perfect_csi)

__version__ = "0.1.0"

__all__ = [
    "BracketError",
    "ChannelParams",
    "ContentionParams",
    "ConvergenceError",
    "DEFAULT_TOL",
    "DomainError",
    "EvaluationError",
    "GeneralBackoffPolicy",
    "LinearBackoffPolicy",
    "PerfectCsiPolicy",
    "PolicyError",
    "RngStream",
    "SimConfig",
    "SimReport",
    "SolverError",
    "SolverTrace",
    "StarvationError",
    "Tolerance",
    "TrainingPoint",
    "beta_from_training",
    "conditional_snr_density",
    "contention_success_prob",
    "dinkelbach_u",
    "dinkelbach_v",
    "exp_integral_e1",
    "expected_rate_bar",
    "find_root",
    "lambda_hat_prime_linear",
    "maximize_1d",
    "optimize_backoff",
    "optimize_perfect_csi",
    "phi_general",
    "phi_linear",
    "phi_perfect_csi",
    "run_replications",
    "run_simulation",
    "sample_contention",
    "sample_error",
    "sample_estimate",
    "scaled_e1",
    "solve_fixed_point_general",
    "solve_fixed_point_linear",
    "solve_perfect_csi",
    "success_prob_given_estimate",
    "sweep_training_time",
    "throughput_gain",
    "throughput_gain_perfect_csi",
]
