"""Penalized selection among arbitrary linear estimators.

Given a correlated Gaussian linear model ``y = X beta + R z`` and any finite
family of linear estimators ``beta_hat_m = Psi_m y``, this package calibrates
a data-free penalty from the spectra of per-model matrices, selects the
family member minimizing the observable penalized criterion, and benchmarks
the selection against the exact-risk oracle. It also ships the estimator
family constructors, noiseless reconstructors for rank-deficient designs,
the Gaussian quadratic-form tail bounds behind the calibration, and a
simulation harness with CSV and figure reports.
"""

from .conc import bound_diag, bound_quadform, laplace_to_tail, log_inequality_check
from .errors import (
    CalibrationWarning,
    ConfigurationError,
    IdentifiabilityError,
    InvalidInputError,
    LinselError,
)
from .famconfig import FamilySpec, build_family_from_config, parse_family_config
from .families import (
    build_basis_constrained,
    build_basis_regularized,
    build_diff_regularizer_family,
    build_gaussian_bank,
    build_ideal,
    build_tikhonov,
    build_variable_selection,
    default_diff_grid,
    ideal_risk,
    merge_families,
)
from .harness import ExperimentConfig, run_inverse, run_smoothing, test_signal
from .identify import (
    Reconstructor,
    check_identifiability,
    reconstructor_basis,
    reconstructor_full_rank,
    reconstructor_quadratic,
)
from .linmodel import (
    EstimatorMatrix,
    LinearModel,
    SpectralSummary,
    oracle_select,
    predictive_risk,
    pseudo_inverse,
    quadratic_risk,
)
from .penalty import (
    PenaltyConfig,
    PenaltyTable,
    calibrate,
    kernel_weights,
    model_complexity,
    penalty_value,
    per_model_matrices,
)
from .select import RiskReport, SelectionResult, criterion, risk_report, select

__version__ = "0.1.0"

__all__ = [
    "CalibrationWarning",
    "ConfigurationError",
    "EstimatorMatrix",
    "ExperimentConfig",
    "FamilySpec",
    "IdentifiabilityError",
    "InvalidInputError",
    "LinearModel",
    "LinselError",
    "PenaltyConfig",
    "PenaltyTable",
    "Reconstructor",
    "RiskReport",
    "SelectionResult",
    "SpectralSummary",
    "bound_diag",
    "bound_quadform",
    "build_basis_constrained",
    "build_family_from_config",
    "build_basis_regularized",
    "build_diff_regularizer_family",
    "build_gaussian_bank",
    "build_ideal",
    "build_tikhonov",
    "build_variable_selection",
    "calibrate",
    "check_identifiability",
    "criterion",
    "default_diff_grid",
    "ideal_risk",
    "kernel_weights",
    "laplace_to_tail",
    "log_inequality_check",
    "merge_families",
    "model_complexity",
    "oracle_select",
    "parse_family_config",
    "penalty_value",
    "per_model_matrices",
    "predictive_risk",
    "pseudo_inverse",
    "quadratic_risk",
    "reconstructor_basis",
    "reconstructor_full_rank",
    "reconstructor_quadratic",
    "risk_report",
    "run_inverse",
    "run_smoothing",
    "select",
    "test_signal",
]
