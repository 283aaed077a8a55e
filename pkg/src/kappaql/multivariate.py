"""Kappa correlation matrix over several margins."""
import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import DegenerateMarginError, check_n
from .estimator import kappa_corr
from .inference import (VarianceModel, boundary_result, lr_test, wald_test,
                        wedderburn_quasi_loglik)
from .scores import centred_scores


@dataclass(frozen=True)
class KappaMatrix:
    """Symmetric ``(p, p)`` kappa correlation matrix with unit diagonal.

    ``covariance`` holds the unnormalised ``tau_cov`` entries and ``n`` the
    common sample size.  ``tests`` is filled by :func:`kappa_matrix` when a
    variance model is supplied, keyed by ``(a, b)`` with ``a < b``.
    """

    entries: np.ndarray
    covariance: np.ndarray
    n: int
    names: tuple
    tests: dict = field(default_factory=dict)

    @property
    def dim(self):
        return self.entries.shape[0]

    def is_psd(self, tol=1e-12):
        """Diagnostic only: nothing guarantees positive semi-definiteness."""
        return bool(np.linalg.eigvalsh(self.entries).min() >= -tol)


def kappa_matrix(columns, names=None, vm=None):
    """Pairwise kappa correlations of ``p >= 2`` equal-length columns.

    Parameters
    ----------
    columns : sequence of array-like, or ndarray of shape (n, p)
        A 2-d array is read column-wise.
    names : sequence of str, optional
        Column labels; default ``0 .. p-1``.
    vm : VarianceModel, optional
        If given, per-pair Wald and LRT results are attached.

    Raises
    ------
    DegenerateMarginError
        For a constant column; ``.margin`` is the column index.
    """
    if isinstance(columns, np.ndarray) and columns.ndim == 2:
        columns = [columns[:, j] for j in range(columns.shape[1])]
    columns = [np.asarray(c, dtype=np.float64) for c in columns]
    p = len(columns)
    if p < 2:
        raise ValueError(f"need at least 2 columns, got {p}")
    n = columns[0].shape[0]
    if any(c.shape != (n,) for c in columns):
        raise ValueError("all columns must be one-dimensional with the same length")
    names = tuple(range(p)) if names is None else tuple(names)
    if len(names) != p:
        raise ValueError("names must match the number of columns")

    # one centred matrix per column, shared read-only across pairs
    cache = [centred_scores(c) for c in columns]
    for j, k in enumerate(cache):
        if k.is_degenerate():
            raise DegenerateMarginError(j, f"column {j} ({names[j]!r}) is degenerate: "
                                           "all centred scores are zero")
    corr = np.eye(p)
    cov = np.zeros((p, p))
    for a in range(p):
        cov[a, a] = float(np.sum(cache[a].entries ** 2) / (n * (n - 1)))
        for b in range(a + 1, p):
            est = kappa_corr(cache[a], cache[b], names=(names[a], names[b]))
            corr[a, b] = corr[b, a] = est.tau_corr
            cov[a, b] = cov[b, a] = est.tau_cov
    m = KappaMatrix(corr, cov, n, names)
    if vm is not None:
        m = KappaMatrix(corr, cov, n, names, _pair_tests(m, n, vm))
    return m


def _pair_tests(m, n, vm):
    tests = {}
    p = m.dim
    for a in range(p):
        for b in range(a + 1, p):
            tau = float(m.entries[a, b])
            if abs(tau) >= 1.0:
                tests[(a, b)] = (boundary_result("wald", tau, n), boundary_result("lrt", tau, n))
            else:
                tests[(a, b)] = (wald_test(tau, n, vm), lr_test(tau, n))
    return tests


def matrix_tests(m, n=None, vm=VarianceModel()):
    """Wald and LRT results for every off-diagonal pair.

    Returns a list of ``((a, b), wald, lrt)`` in row-major order.  Entries at
    ``|tau| = 1`` get :func:`~kappaql.inference.boundary_result`.  No
    multiple-comparison correction is applied.
    """
    n = check_n(m.n if n is None else n)
    tests = _pair_tests(m, n, vm)
    return [(key, w, lr) for key, (w, lr) in tests.items()]


def joint_quasi_loglik(entries, n):
    """Additive ``-n sum_{a<b} log(1 - tau_ab**2)`` over the upper triangle."""
    t = np.asarray(entries, dtype=np.float64)
    iu = np.triu_indices(t.shape[0], k=1)
    vals = t[iu]
    if np.any(np.abs(vals) >= 1.0):
        return math.inf
    return float(-check_n(n) * np.sum(np.log1p(-vals * vals)))


def joint_wedderburn_loglik(entries, estimate, n, vm=VarianceModel()):
    """Sum over ``a < b`` of :func:`~kappaql.inference.wedderburn_quasi_loglik`.

    Maximised, with value 0, at ``entries == estimate``.
    """
    t = np.asarray(entries, dtype=np.float64)
    e = np.asarray(estimate, dtype=np.float64)
    a, b = np.triu_indices(t.shape[0], k=1)
    if np.any(np.abs(t[a, b]) >= 1.0):
        return -math.inf
    return float(sum(wedderburn_quasi_loglik(t[i, j], e[i, j], n, vm) for i, j in zip(a, b)))
