"""Risk-ratio and risk-difference regression for binary outcomes.

Modified Poisson (log link, risk ratios) and modified least squares
(identity link, risk differences) fitted by quasi-likelihood with sandwich
standard errors, or with ridge, lasso and elastic-net penalties tuned by
cross-validation and bootstrap percentile intervals.
"""

__version__ = "0.1.0"

from .bootstrap import BootstrapConfig, BootstrapResult, bootstrap_pipeline, percentile_ci
from .data import DesignMatrix, EncodingPlan, PredictorSpec, RawTable, destandardize, encode, standardize
from .diagnostics import diagnose, epv, separation_scan, vif
from .errors import ConvergenceError, NumericalError, RiskRegError, ValidationError
from .families import BINOMIAL_LOGIT, GAUSSIAN_IDENTITY, POISSON_LOG, get_family
from .penalized import PenaltySpec, cd_fit, fit_path, kkt_check, lambda_sequence
from .pipeline import Penalty, fit_model
from .quasi import effect_measures, fit_irls, sandwich_cov
from .selection import cross_validate, fit_tuned, select_alpha

__all__ = [
    "BINOMIAL_LOGIT", "GAUSSIAN_IDENTITY", "POISSON_LOG", "BootstrapConfig", "BootstrapResult",
    "ConvergenceError", "DesignMatrix", "EncodingPlan", "NumericalError", "Penalty", "PenaltySpec",
    "PredictorSpec", "RawTable", "RiskRegError", "ValidationError", "bootstrap_pipeline", "cd_fit",
    "cross_validate", "destandardize", "diagnose", "effect_measures", "encode", "epv", "fit_irls",
    "fit_model", "fit_path", "fit_tuned", "get_family", "kkt_check", "lambda_sequence", "percentile_ci",
    "sandwich_cov", "select_alpha", "separation_scan", "standardize", "vif",
]
