"""Smoothing quantification for multivariate CAR disease-mapping priors.

The library computes the theoretical multivariate total conditional variance
(MultiTCV) of iCAR / LCAR / LjCAR M-model priors, fits the Poisson-logitNormal
hierarchical model by adaptive MCMC, simulates GP-based count scenarios, and
reports empirical smoothing metrics (RMSS, maxRMSS, RSP, SP).
"""

from .graph import ArealGraph, GraphError, spain_provinces
from .priors import (
    BartlettFactor,
    BetweenCov,
    PriorSpec,
    full_joint_precision,
    joint_precision_block,
    mixing_matrix,
    sample_bartlett,
    within_precision,
)
from .tcv import TcvResult, multivariate_tcv, tcv_grid
from .poisson_gamma import (
    PGParams,
    eta_correlation,
    posterior_rate,
    posterior_relative_risk,
    smoothing_difference,
)
from .scenario import (
    CountDataset,
    GpConfig,
    Grid,
    ScenarioConfig,
    aggregate_rates,
    coregionalize,
    empirical_disease_correlation,
    matern,
    sample_counts,
    simulate_gp_fields,
)
from .mcmc import (
    FitConfig,
    ModelState,
    PosteriorSummary,
    fit,
    geweke_joint_check,
    log_posterior,
    sample_prior_field,
)
from .metrics import (
    SmoothingReport,
    average_rate,
    expected_over_replicates,
    max_rmss,
    rmss,
    rsp,
    sp,
)

from .studies import (
    StudyConfig,
    read_count_data,
    run_across_study,
    run_real_data,
    run_within_study,
)

__version__ = "0.1.0"

__all__ = [
    "ArealGraph",
    "GraphError",
    "spain_provinces",
    "BetweenCov",
    "PriorSpec",
    "BartlettFactor",
    "mixing_matrix",
    "sample_bartlett",
    "within_precision",
    "joint_precision_block",
    "full_joint_precision",
    "TcvResult",
    "multivariate_tcv",
    "tcv_grid",
    "PGParams",
    "eta_correlation",
    "posterior_relative_risk",
    "posterior_rate",
    "smoothing_difference",
    "Grid",
    "GpConfig",
    "ScenarioConfig",
    "CountDataset",
    "matern",
    "simulate_gp_fields",
    "coregionalize",
    "aggregate_rates",
    "sample_counts",
    "empirical_disease_correlation",
    "FitConfig",
    "PosteriorSummary",
    "fit",
    "log_posterior",
    "sample_prior_field",
    "SmoothingReport",
    "rmss",
    "max_rmss",
    "rsp",
    "sp",
    "expected_over_replicates",
    "average_rate",
    "ModelState",
    "geweke_joint_check",
    "StudyConfig",
    "read_count_data",
    "run_within_study",
    "run_across_study",
    "run_real_data",
]
