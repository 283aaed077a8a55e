"""Kemeny kappa correlation: estimation, quasi-likelihood inference and regression."""
from ._validation import DegenerateMarginError
from .embeddings import LOGIT, PROBIT, kappa_surface, m_logit, m_probit
from .estimator import KappaEstimate, fast_kappa, kappa_corr, kappa_cov, kappa_estimate
from .inference import (DEFAULT_C, TestResult, VarianceModel, lr_test, standard_error,
                        wald_test)
from .models import KappaCorrelation, KappaRegression
from .multivariate import KappaMatrix, kappa_matrix
from .regression import ContrastDesign, FeasibilityError, build_design
from .scores import CentredScoreMatrix, centred_scores, score_matrix

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_C", "LOGIT", "PROBIT", "CentredScoreMatrix", "ContrastDesign",
    "DegenerateMarginError", "FeasibilityError", "KappaCorrelation", "KappaEstimate",
    "KappaMatrix", "KappaRegression", "TestResult", "VarianceModel", "build_design",
    "centred_scores", "fast_kappa", "kappa_corr", "kappa_cov", "kappa_estimate",
    "kappa_matrix", "kappa_surface", "lr_test", "m_logit", "m_probit", "score_matrix",
    "standard_error", "wald_test",
]
