"""Point estimates of the kappa covariance and correlation.

The covariance form is the U-statistic mean of the cross kernel
``Z[k, l] = kx[k, l] * ky[k, l]`` over the off-diagonal; the correlation form
normalises it by the off-diagonal sums of squares of each centred margin.
"""
from dataclasses import dataclass

import numpy as np

from ._validation import DegenerateMarginError, check_observations
from .scores import CentredScoreMatrix, centred_scores, kernel_product


@dataclass(frozen=True)
class KappaEstimate:
    """Result of :func:`kappa_corr`.

    ``sigma_x2`` and ``sigma_y2`` are the mean squared off-diagonal centred
    scores, so ``tau_corr == tau_cov / sqrt(sigma_x2 * sigma_y2)``.
    """

    tau_cov: float
    tau_corr: float
    n: int
    gamma3: float
    gamma4: float
    sigma_x2: float
    sigma_y2: float


@dataclass(frozen=True)
class HajekProjection:
    terms: np.ndarray
    mean: float


def _offdiag_mean(z):
    n = z.shape[0]
    return float(z.sum() / (n * (n - 1)))


def kappa_cov(z):
    """Mean of the kernel matrix over the ``n(n-1)`` off-diagonal cells."""
    z = np.asarray(z, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != z.shape[1] or z.shape[0] < 2:
        raise ValueError(f"kernel matrix must be square with n >= 2, got {z.shape}")
    return _offdiag_mean(z)


def moments(z):
    """Raw third and fourth power means of the kernel off-diagonal.

    These are the uncentred power sums ``sum Z**3 / (n(n-1))`` and
    ``sum Z**4 / (n(n-1))``; they are not re-centred about ``tau_cov``.
    """
    z = np.asarray(z, dtype=np.float64)
    z2 = z * z
    return _offdiag_mean(z2 * z), _offdiag_mean(z2 * z2)


def kappa_corr(kx, ky, names=("x", "y")):
    """Kappa covariance, correlation and moment diagnostics for two margins.

    Parameters
    ----------
    kx, ky : CentredScoreMatrix
        Centred score matrices of the two margins (same ``n``).
    names : tuple of two str
        Labels used when reporting a degenerate margin.

    Raises
    ------
    DegenerateMarginError
        If either margin has only zero centred scores, e.g. a constant vector.
    """
    z = kernel_product(kx, ky)
    ex = kx.entries if isinstance(kx, CentredScoreMatrix) else np.asarray(kx, dtype=np.float64)
    ey = ky.entries if isinstance(ky, CentredScoreMatrix) else np.asarray(ky, dtype=np.float64)
    ssx = float(np.sum(ex * ex))
    ssy = float(np.sum(ey * ey))
    for ss, name in ((ssx, names[0]), (ssy, names[1])):
        if ss == 0.0:
            raise DegenerateMarginError(name)
    n = z.shape[0]
    total = float(z.sum())
    m = n * (n - 1)
    tau_corr = total / np.sqrt(ssx * ssy)
    gamma3, gamma4 = moments(z)
    return KappaEstimate(
        tau_cov=total / m,
        tau_corr=float(np.clip(tau_corr, -1.0, 1.0)),
        n=n,
        gamma3=gamma3,
        gamma4=gamma4,
        sigma_x2=ssx / m,
        sigma_y2=ssy / m,
    )


def kappa_estimate(x, y):
    """Convenience wrapper: score, centre and estimate from raw observations."""
    x = check_observations(x, "x")
    y = check_observations(y, "y")
    if x.shape != y.shape:
        raise ValueError(f"x and y differ in length: {x.shape[0]} vs {y.shape[0]}")
    return kappa_corr(centred_scores(x), centred_scores(y))


def hajek_terms(x, y):
    """Plug-in Hajek projection terms ``H[n] = mean_{l != n} Z[n, l]``.

    The arithmetic mean of the terms equals ``kappa_cov`` of the same sample.
    """
    x = check_observations(x, "x", min_n=3)
    y = check_observations(y, "y", min_n=3)
    if x.shape != y.shape:
        raise ValueError(f"x and y differ in length: {x.shape[0]} vs {y.shape[0]}")
    z = kernel_product(centred_scores(x), centred_scores(y))
    terms = z.sum(axis=1) / (z.shape[0] - 1)
    return HajekProjection(terms=terms, mean=float(terms.mean()))


# -- fast path ---------------------------------------------------------------
#
# The centred matrix is C - r 1' - 1 c' + g 11' with the diagonal removed.
# Since its row sums are c - g and its column sums r - g, the off-diagonal
# inner product of two centred matrices collapses to
#   <Cx, Cy> - (n-1)(rx.ry + cx.cy) - (rx.cy + cx.ry) + n(n+1) gx gy,
# leaving <Cx, Cy> as the only O(n^2) term.

_CHUNK = 2048


def _margin_means(x):
    n = x.shape[0]
    xs = np.sort(x)
    n_le = np.searchsorted(xs, x, side="right") - 1
    n_ge = n - np.searchsorted(xs, x, side="left") - 1
    r = (2.0 * n_le - (n - 1)) / (n - 1)
    c = (2.0 * n_ge - (n - 1)) / (n - 1)
    g = r.sum() / n
    return r, c, g


def _score_inner(x, y):
    """Off-diagonal ``sum Cx * Cy`` without forming float matrices."""
    n = x.shape[0]
    agree = 0
    for start in range(0, n, _CHUNK):
        stop = min(start + _CHUNK, n)
        ax = x[start:stop, None] >= x[None, :]
        ay = y[start:stop, None] >= y[None, :]
        agree += int(np.count_nonzero(ax == ay))
    # the diagonal always agrees (True == True)
    return 2 * (agree - n) - n * (n - 1)


def _centred_inner(n, sxy, mx, my):
    rx, cx, gx = mx
    ry, cy, gy = my
    return (sxy - (n - 1) * (rx @ ry + cx @ cy) - (rx @ cy + cx @ ry)
            + n * (n + 1) * gx * gy)


def fast_kappa(x, y):
    """``(tau_cov, tau_corr)`` in O(n^2) boolean work and O(n) memory per row chunk.

    Agrees with :func:`kappa_corr` to rounding error; used by the Monte Carlo
    engine where the moment diagnostics are not needed.
    """
    x = check_observations(x, "x")
    y = check_observations(y, "y")
    n = x.shape[0]
    if y.shape[0] != n:
        raise ValueError(f"x and y differ in length: {n} vs {y.shape[0]}")
    mx = _margin_means(x)
    my = _margin_means(y)
    m = n * (n - 1)
    sxy = _centred_inner(n, _score_inner(x, y), mx, my)
    sxx = _centred_inner(n, m, mx, mx)
    syy = _centred_inner(n, m, my, my)
    for ss, name in ((sxx, "x"), (syy, "y")):
        if ss <= 1e-9 * m:
            raise DegenerateMarginError(name)
    tau_corr = float(np.clip(sxy / np.sqrt(sxx * syy), -1.0, 1.0))
    return float(sxy / m), tau_corr
