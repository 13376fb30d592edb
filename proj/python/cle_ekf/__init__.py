"""Extended Kalman filtering with CLE-derived process noise covariance."""

from ._core import (
    ConfigError,
    InfeasibleError,
    NumericalError,
    ReactionNetwork,
    check_exponential_bound,
    delta_max,
    diffusion,
    drift,
    gamma,
    gene_expression_model,
    measure,
    polynomial_coefficients,
    process_noise_cov,
    propensities,
    propensity_jacobian,
    run_experiment,
    run_filter,
    simulate,
    spectral_norm,
)

__all__ = [
    "ConfigError",
    "InfeasibleError",
    "NumericalError",
    "ReactionNetwork",
    "check_exponential_bound",
    "delta_max",
    "diffusion",
    "drift",
    "gamma",
    "gene_expression_model",
    "measure",
    "polynomial_coefficients",
    "process_noise_cov",
    "propensities",
    "propensity_jacobian",
    "run_experiment",
    "run_filter",
    "simulate",
    "spectral_norm",
]
