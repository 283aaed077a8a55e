"""Bradley-Terry and Thurstone-Mosteller maps onto the kappa scale.

A paired-comparison probability ``pi = P(Y_n > Y_n')`` corresponds to
``tau = 2 pi - 1``.  Composing with the logistic and probit links gives the
two embeddings below; both are odd, strictly increasing and bounded by 1.
"""
import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erf, expit, ndtr

LOGIT_SLOPE = 0.5
PROBIT_SLOPE = 2.0 / math.sqrt(2.0 * math.pi)


def m_logit(t):
    """``2 expit(t) - 1``, evaluated as ``tanh(t / 2)`` for accuracy near zero."""
    return np.tanh(np.asarray(t, dtype=np.float64) / 2.0)


def m_probit(t):
    """``2 Phi(t) - 1``, evaluated as ``erf(t / sqrt 2)``."""
    return erf(np.asarray(t, dtype=np.float64) / math.sqrt(2.0))


def tau_from_pairwise_prob(p):
    """``2 p - 1`` for a comparison probability ``p`` in [0, 1]."""
    p = np.asarray(p, dtype=np.float64)
    if np.any((p < 0) | (p > 1)) or np.any(np.isnan(p)):
        raise ValueError("pairwise probabilities must lie in [0, 1]")
    return 2.0 * p - 1.0


@dataclass(frozen=True)
class EmbeddingMap:
    family: str
    forward: Callable
    slope_at_zero: float

    def __call__(self, t):
        return self.forward(t)

    def probability(self, t):
        """Underlying paired-comparison probability ``(1 + forward(t)) / 2``."""
        if self.family == "logit":
            return expit(t)
        return ndtr(t)


LOGIT = EmbeddingMap("logit", m_logit, LOGIT_SLOPE)
PROBIT = EmbeddingMap("probit", m_probit, PROBIT_SLOPE)


def embedding(family):
    try:
        return {"logit": LOGIT, "probit": PROBIT}[family]
    except KeyError:
        raise ValueError(f"unknown family {family!r}; expected 'logit' or 'probit'") from None


def kappa_surface(X, coef, family):
    """Kappa-scale surface ``m(coef' (X[n] - X[n']))`` of a fitted BT/TM predictor.

    Returns the ``(n, n)`` matrix of pairwise ``tau`` values (zero diagonal),
    for comparison with :func:`kappaql.regression.linear_predictor`.
    """
    X = np.asarray(X, dtype=np.float64)
    s = X @ np.asarray(coef, dtype=np.float64)
    return embedding(family)(s[:, None] - s[None, :])


def local_linear(t, family):
    """First-order approximation ``slope_at_zero * t``."""
    return embedding(family).slope_at_zero * np.asarray(t, dtype=np.float64)
