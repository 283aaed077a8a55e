"""scikit-learn compatible estimators wrapping the functional API."""
import math

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import regression
from .inference import DEFAULT_C, VarianceModel
from .multivariate import kappa_matrix, matrix_tests


class KappaCorrelation(BaseEstimator):
    """Kappa correlation matrix of the columns of ``X``.

    Parameters
    ----------
    c : float, default 0.4456
        Variance constant used by the Wald tests.
    denominator : {"n", "n-2"}, default "n"

    Attributes
    ----------
    correlation_ : ndarray of shape (n_features, n_features)
    covariance_ : ndarray of shape (n_features, n_features)
        Unnormalised ``tau_cov`` entries.
    tests_ : list of ((a, b), wald, lrt)
    n_features_in_ : int
    n_samples_ : int

    Examples
    --------
    >>> import numpy as np
    >>> X = np.array([[1., 2.], [2., 1.], [3., 4.], [4., 3.]])
    >>> KappaCorrelation().fit(X).correlation_.shape
    (2, 2)
    """

    def __init__(self, c=DEFAULT_C, denominator="n"):
        self.c = c
        self.denominator = denominator

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64, ensure_min_samples=2, ensure_min_features=2)
        vm = VarianceModel(self.c, self.denominator)
        m = kappa_matrix(X)
        self.correlation_ = m.entries
        self.covariance_ = m.covariance
        self.tests_ = matrix_tests(m, vm=vm)
        self.n_features_in_ = X.shape[1]
        self.n_samples_ = X.shape[0]
        self.matrix_ = m
        return self


class KappaRegression(BaseEstimator):
    """Generalised Mann-Whitney kappa regression.

    Fits ``theta`` so that pairwise contrasts ``(X[n] - X[n']) @ theta`` track
    the centred weak-order scores of ``y``.  There is no intercept: it
    cancels in every contrast.

    Parameters
    ----------
    tol : float, default 1e-8
        Gradient-norm convergence threshold.
    max_iter : int, default 100
    response_scale : float, default 1.0
        Divides the pair responses (pass ``c`` for the ``z / c`` variant).

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
    fit_ : RegressionFit
    n_iter_ : int
    converged_ : bool
    """

    def __init__(self, tol=1e-8, max_iter=100, response_scale=1.0):
        self.tol = tol
        self.max_iter = max_iter
        self.response_scale = response_scale

    def fit(self, X, y, pair_weight=None):
        X, y = check_X_y(X, y, dtype=np.float64, ensure_min_samples=2, y_numeric=True)
        d = regression.build_design(X, y, pair_weight, self.response_scale)
        res = regression.fit(d, tol=self.tol, max_iter=self.max_iter)
        self.coef_ = res.theta
        self.fit_ = res
        self.n_iter_ = res.iterations
        self.converged_ = res.converged
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        """Latent scores ``X @ coef_``; pairwise predictions are their differences."""
        check_is_fitted(self)
        X = check_array(X, dtype=np.float64)
        return X @ self.coef_

    def predict_pairwise(self, X):
        """``(n, n)`` matrix of predicted pairwise kappa values ``eta[n, n']``."""
        s = self.predict(X)
        return s[:, None] - s[None, :]

    def score(self, X, y):
        """Negated fit criterion on ``(X, y)``; ``-inf`` if ``coef_`` is infeasible there."""
        check_is_fitted(self)
        X, y = check_X_y(X, y, dtype=np.float64, ensure_min_samples=2, y_numeric=True)
        d = regression.build_design(X, y, None, self.response_scale)
        try:
            return -regression.objective(d, self.coef_)
        except regression.FeasibilityError:
            return -math.inf
