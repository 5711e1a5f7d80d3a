"""Differentially private linear regression and synthetic data via
binned aggregation under Gaussian differential privacy.

The pipeline spends one composed GDP budget across four stages: a
private recursive partition of the feature domain, noisy-count bin
screening, privatized per-bin sums, and either a bias-corrected
weighted-least-squares fit with valid confidence intervals or a
synthetic dataset whose re-aggregated sums match the privatized ones in
distribution.
"""

from .aggregation import BinSummary, PreparedBins, prepare, sensitivity_vector
from .errors import (
    BinAggError,
    DataLoadError,
    EmptyResultError,
    InsufficientBinsError,
    SingularSystemError,
)
from .gdp import (
    ApproxDpParams,
    BudgetAllocation,
    RandomSource,
    allocate,
    compose,
    epsilon_for_delta,
    gaussian_mechanism,
    gdp_to_approx_dp,
    gdp_to_pure_dp,
    pure_dp_to_gdp,
    sample_laplace,
    std_normal_cdf,
    std_normal_quantile,
)
from .pipeline import FitConfig, FitResult, SynthResult, run_fit, run_synthesis
from .privtree import Box, PrivTreeConfig, build, calibrate, contains_mask, widest_dimension
from .regression import (
    PrivateFit,
    PrivatizedSummaries,
    confidence_intervals,
    covariance,
    estimating_scores,
    fit_debiased,
    fit_naive,
    naive_covariance,
    ols_exact,
    private_fit,
    privatize,
    wls_exact,
)
from .simulate import (
    SimulationConfig,
    relative_l2_error,
    relative_mse,
    simulate_dataset,
)
from .synthesis import SyntheticDataset, aggregate, generate

__version__ = "0.1.0"

__all__ = [
    "ApproxDpParams",
    "BinAggError",
    "BinSummary",
    "Box",
    "BudgetAllocation",
    "DataLoadError",
    "EmptyResultError",
    "FitConfig",
    "FitResult",
    "InsufficientBinsError",
    "PreparedBins",
    "PrivTreeConfig",
    "PrivateFit",
    "PrivatizedSummaries",
    "RandomSource",
    "SimulationConfig",
    "SingularSystemError",
    "SynthResult",
    "SyntheticDataset",
    "aggregate",
    "allocate",
    "build",
    "calibrate",
    "compose",
    "confidence_intervals",
    "contains_mask",
    "covariance",
    "epsilon_for_delta",
    "estimating_scores",
    "fit_debiased",
    "fit_naive",
    "gaussian_mechanism",
    "gdp_to_approx_dp",
    "gdp_to_pure_dp",
    "generate",
    "naive_covariance",
    "ols_exact",
    "prepare",
    "private_fit",
    "privatize",
    "pure_dp_to_gdp",
    "relative_l2_error",
    "relative_mse",
    "run_fit",
    "run_synthesis",
    "sample_laplace",
    "sensitivity_vector",
    "simulate_dataset",
    "std_normal_cdf",
    "std_normal_quantile",
    "widest_dimension",
    "wls_exact",
]
