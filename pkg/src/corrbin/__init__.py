"""Correlated multivariate binary distributions: fitting, sampling, benchmarking."""

from .benchmark import (
    ExperimentConfig,
    ExperimentRecord,
    aggregate_quantiles,
    figure_of_merit,
    run_experiment,
)
from .conditionals import ConditionalsFamily
from .fitting import FitConfig, FitReport, fit, fit_linear, fit_row, solve_linear_row
from .gaussian import GaussianCopulaFamily, bvn_cdf, fit_gc
from .links import CLOGLOG, LOGISTIC, PROBIT, TRUNCATED_LINEAR, LinkFunction, get_link
from .matgen import GenConfig, det_update, random_cross_moment_matrix, replacement_bounds
from .mh import ChainStats, TargetDensity, acceptance, autocov_decomposition_check, run_chain
from .moments import (
    DensePmf,
    FeasibilityReport,
    bahadur_pmf,
    extract_coefficients,
    frechet_bounds,
    lp_distance_check,
    oracle_moments,
    validate_cross_moments,
)
from .quadexp import QuadExpFamily, cox_coefficients, cox_marginal_step, derive_logistic_family

__version__ = "0.1.0"

__all__ = [
    "CLOGLOG",
    "ChainStats",
    "ConditionalsFamily",
    "DensePmf",
    "ExperimentConfig",
    "ExperimentRecord",
    "FeasibilityReport",
    "FitConfig",
    "FitReport",
    "GaussianCopulaFamily",
    "GenConfig",
    "LOGISTIC",
    "LinkFunction",
    "PROBIT",
    "QuadExpFamily",
    "TRUNCATED_LINEAR",
    "TargetDensity",
    "acceptance",
    "aggregate_quantiles",
    "autocov_decomposition_check",
    "bahadur_pmf",
    "bvn_cdf",
    "cox_coefficients",
    "cox_marginal_step",
    "derive_logistic_family",
    "det_update",
    "extract_coefficients",
    "figure_of_merit",
    "fit",
    "fit_gc",
    "fit_linear",
    "fit_row",
    "frechet_bounds",
    "get_link",
    "lp_distance_check",
    "oracle_moments",
    "random_cross_moment_matrix",
    "replacement_bounds",
    "run_chain",
    "run_experiment",
    "solve_linear_row",
    "validate_cross_moments",
]
