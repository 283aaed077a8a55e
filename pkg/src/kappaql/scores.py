"""Weak-order score matrices, their double centring and the cross kernel.

All matrices are dense ``(n, n)`` arrays with an exactly zero diagonal.
"""
from dataclasses import dataclass

import numpy as np

from ._validation import check_observations, check_square


@dataclass(frozen=True)
class CentredScoreMatrix:
    """Double-centred score matrix together with the means used to centre it.

    Attributes
    ----------
    entries : ndarray of shape (n, n)
        Centred scores; the diagonal is reset to zero after centring.
    row_means, col_means : ndarray of shape (n,)
        Row and column sums of the raw score matrix divided by ``n - 1``.
    grand_mean : float
        Total of the raw score matrix divided by ``n**2 - n``.
    """

    entries: np.ndarray
    row_means: np.ndarray
    col_means: np.ndarray
    grand_mean: float

    @property
    def n(self):
        return self.entries.shape[0]

    def max_abs(self):
        """Largest absolute off-diagonal centred score (always <= 4)."""
        return float(np.max(np.abs(self.entries)))

    def is_degenerate(self):
        return not np.any(self.entries)


def score_matrix(x):
    """Hollow sign matrix of pairwise weak-order comparisons.

    ``C[k, l] = +1`` if ``x[k] >= x[l]``, ``-1`` if ``x[k] < x[l]`` and the
    diagonal is 0.  Tied pairs therefore score ``+1`` in both directions.

    Parameters
    ----------
    x : array-like of shape (n,)
        Finite observations, ``n >= 2``.

    Returns
    -------
    C : ndarray of int8, shape (n, n)
    """
    x = check_observations(x)
    c = np.where(x[:, None] >= x[None, :], 1, -1).astype(np.int8)
    np.fill_diagonal(c, 0)
    return c


def centre(c):
    """Double-centre a hollow score matrix.

    Row and column means divide by ``n - 1`` and the grand mean by
    ``n**2 - n``; the diagonal of the result is forced back to zero.
    """
    c = check_square(c, "score matrix")
    if np.any(np.diag(c) != 0):
        raise ValueError("score matrix must be hollow")
    n = c.shape[0]
    row_means = c.sum(axis=1) / (n - 1)
    col_means = c.sum(axis=0) / (n - 1)
    grand_mean = c.sum() / (n * n - n)
    k = c - row_means[:, None] - col_means[None, :] + grand_mean
    np.fill_diagonal(k, 0.0)
    return CentredScoreMatrix(k, row_means, col_means, float(grand_mean))


def centred_scores(x):
    """Shortcut for ``centre(score_matrix(x))``."""
    return centre(score_matrix(x))


def kernel_product(kx, ky):
    """Element-wise product ``Z = kx * ky`` of two centred score matrices."""
    ex = _entries(kx)
    ey = _entries(ky)
    if ex.shape != ey.shape:
        raise ValueError(f"dimension mismatch: {ex.shape[0]} vs {ey.shape[0]}")
    z = ex * ey
    np.fill_diagonal(z, 0.0)
    return z


def _entries(k):
    if isinstance(k, CentredScoreMatrix):
        return k.entries
    return check_square(k, "centred score matrix")
