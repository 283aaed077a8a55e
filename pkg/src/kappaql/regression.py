"""Generalised Mann-Whitney kappa regression.

Each pair of observations ``(n, n')`` contributes a covariate contrast
``dx = X[n] - X[n']``, a linear predictor ``eta = dx @ theta`` and a pair
response ``z``.  The fit minimises the convex criterion

    F(theta) = sum_pairs w * (-log(1 - eta**2) - z * eta)

over the open polytope ``{theta : |eta| < 1 for every pair}``.  The barrier
part is the pairwise quasi-likelihood; the linear part carries the data, so
the stationarity condition ``grad F = 0`` is the Mann-Whitney estimating
equation ``sum w 2 eta / (1 - eta**2) dx = sum w z dx``.  Maximising ``-F``
is the same problem.

Ordered pairs ``(n, n')`` and ``(n', n)`` carry negated contrasts, so they
are folded into one unordered contrast whose weight is the sum of both
weights; objective, gradient and Hessian are unchanged by the folding.
"""
import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.utils.validation import check_array

from ._validation import check_observations
from .scores import centred_scores

logger = logging.getLogger(__name__)

FRACTION_TO_BOUNDARY = 0.99
ARMIJO = 1e-4


class FeasibilityError(ValueError):
    """A parameter vector puts some pair on or outside ``|eta| < 1``."""

    def __init__(self, pair, eta):
        self.pair = tuple(int(i) for i in pair)
        self.eta = float(eta)
        super().__init__(f"infeasible theta: |eta| = {abs(eta):.6g} >= 1 at pair {self.pair}")


@dataclass(frozen=True)
class ContrastDesign:
    """Unordered pairwise contrasts.

    Attributes
    ----------
    pairs : int ndarray of shape (m, 2)
        Observation indices ``(n, n')`` with ``n < n'``.
    delta_x : ndarray of shape (m, p)
        ``X[n] - X[n']``.
    z : ndarray of shape (m,)
        Pair response for the ``(n, n')`` orientation, already divided by
        ``response_scale``.
    weights : ndarray of shape (m,)
        Combined weight of both orientations.
    """

    pairs: np.ndarray
    delta_x: np.ndarray
    z: np.ndarray
    weights: np.ndarray
    n: int
    response_scale: float = 1.0
    full_rank: bool = field(init=False)

    def __post_init__(self):
        rank = np.linalg.matrix_rank(self.delta_x) if self.delta_x.size else 0
        object.__setattr__(self, "full_rank", bool(rank == self.p))

    @property
    def p(self):
        return self.delta_x.shape[1]

    @property
    def n_contrasts(self):
        return self.delta_x.shape[0]

    def ordered(self):
        """Expand to the ``n (n - 1)`` ordered contrasts.

        Returns ``(pairs, delta_x, z, weights)`` with each unordered contrast
        followed by its reversal.  The reversed ``z`` is the negation of the
        folded response, which reproduces the folded objective exactly.
        """
        m = self.n_contrasts
        pairs = np.empty((2 * m, 2), dtype=int)
        pairs[0::2] = self.pairs
        pairs[1::2] = self.pairs[:, ::-1]
        dx = np.empty((2 * m, self.p))
        dx[0::2] = self.delta_x
        dx[1::2] = -self.delta_x
        z = np.repeat(self.z, 2)
        z[1::2] *= -1
        w = np.repeat(self.weights / 2.0, 2)
        return pairs, dx, z, w


def _fold(pairs_n, dx, z_fw, z_bw, w_fw, w_bw, n, scale):
    wsum = w_fw + w_bw
    with np.errstate(invalid="ignore", divide="ignore"):
        z = np.where(wsum > 0, (w_fw * z_fw - w_bw * z_bw) / wsum, 0.0)
    return ContrastDesign(pairs_n, dx, z / scale, wsum, n, float(scale))


def build_design(X, y, weights=None, response_scale=1.0):
    """Pairwise contrast design from covariates and a response.

    The pair response is the centred weak-order score of ``y``,
    ``z[n, n'] = kappa_y[n, n']``.

    Parameters
    ----------
    X : array-like of shape (n, p)
    y : array-like of shape (n,)
    weights : array-like of shape (n, n), optional
        Non-negative ordered-pair weights; the diagonal is ignored.  Default
        ``1 / (n (n - 1))`` for every ordered pair.
    response_scale : float, default 1.0
        Divide the pair responses by this constant.  Passing the variance
        constant ``c`` gives the ``z / c`` form of the estimating equation.
    """
    X = check_array(X, dtype=np.float64, ensure_min_samples=2)
    y = check_observations(y, "y")
    n = X.shape[0]
    if y.shape[0] != n:
        raise ValueError(f"X has {n} rows but y has {y.shape[0]} entries")
    if not response_scale > 0:
        raise ValueError("response_scale must be positive")
    kappa_y = centred_scores(y).entries
    if weights is None:
        weights = np.full((n, n), 1.0 / (n * (n - 1)))
    else:
        weights = np.asarray(weights, dtype=np.float64)
        if weights.shape != (n, n):
            raise ValueError(f"weights must have shape ({n}, {n})")
        if np.any(weights < 0) or not np.all(np.isfinite(weights)):
            raise ValueError("weights must be finite and non-negative")
    i, j = np.triu_indices(n, k=1)
    return _fold(np.column_stack([i, j]), X[i] - X[j], kappa_y[i, j], kappa_y[j, i],
                 weights[i, j], weights[j, i], n, response_scale)


def design_from_contrasts(delta_x, z, weights=None, response_scale=1.0):
    """Design from explicit unordered contrasts, e.g. simulated pair responses."""
    delta_x = check_array(delta_x, dtype=np.float64, ensure_min_samples=1)
    z = check_array(z, ensure_2d=False, dtype=np.float64)
    m = delta_x.shape[0]
    if z.shape != (m,):
        raise ValueError("z must have one entry per contrast")
    w = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, dtype=np.float64)
    if w.shape != (m,) or np.any(w < 0):
        raise ValueError("weights must be non-negative, one per contrast")
    pairs = np.column_stack([np.arange(m), np.arange(m)])
    return ContrastDesign(pairs, delta_x, z / response_scale, w, -1, float(response_scale))


def linear_predictor(d, theta):
    return d.delta_x @ np.asarray(theta, dtype=np.float64)


def _checked_eta(d, theta):
    eta = linear_predictor(d, theta)
    bad = np.abs(eta) >= 1.0
    if np.any(bad) or not np.all(np.isfinite(eta)):
        k = int(np.argmax(bad | ~np.isfinite(eta)))
        raise FeasibilityError(d.pairs[k], eta[k])
    return eta


def feasibility_margin(d, theta):
    """``1 - max |eta|``; positive exactly on the feasible set."""
    eta = linear_predictor(d, theta)
    return float(1.0 - np.max(np.abs(eta))) if eta.size else 1.0


def objective(d, theta):
    """``sum w (-log(1 - eta**2) - z eta)``, to be minimised."""
    eta = _checked_eta(d, theta)
    return float(np.sum(d.weights * (-np.log1p(-eta * eta) - d.z * eta)))


def barrier(d, theta):
    """Data-free pairwise quasi-likelihood ``-sum w log(1 - eta**2)``."""
    eta = _checked_eta(d, theta)
    return float(-np.sum(d.weights * np.log1p(-eta * eta)))


def gradient(d, theta):
    """``sum w (2 eta / (1 - eta**2) - z) dx``."""
    eta = _checked_eta(d, theta)
    coef = d.weights * (2.0 * eta / (1.0 - eta * eta) - d.z)
    return d.delta_x.T @ coef


def hessian(d, theta):
    """``sum 2 w (1 + eta**2) / (1 - eta**2)**2 dx dx'``; positive semi-definite."""
    eta = _checked_eta(d, theta)
    e2 = eta * eta
    coef = 2.0 * d.weights * (1.0 + e2) / (1.0 - e2) ** 2
    return (d.delta_x * coef[:, None]).T @ d.delta_x


def estimating_equation_residual(d, theta):
    """Left minus right side of the Mann-Whitney estimating equation.

    ``sum w 2 eta / (1 - eta**2) dx - sum w z dx``.  Identical to
    :func:`gradient`; kept separate because it is the quantity reported to users.
    """
    eta = _checked_eta(d, theta)
    lhs = d.delta_x.T @ (d.weights * 2.0 * eta / (1.0 - eta * eta))
    rhs = d.delta_x.T @ (d.weights * d.z)
    return lhs - rhs


@dataclass
class RegressionFit:
    theta: np.ndarray
    objective: float
    gradient_norm: float
    hessian: np.ndarray
    iterations: int
    converged: bool
    feasibility_margin: float
    full_rank: bool
    residual: np.ndarray
    trace: list = field(default_factory=list)
    iterates: list = field(default_factory=list)


def _max_step(eta, slope):
    """Largest ``alpha`` in (0, 1] keeping ``|eta + alpha slope| < 1`` with a safety fraction."""
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(slope > 0, (1.0 - eta) / slope, np.inf)
        down = np.where(slope < 0, (-1.0 - eta) / slope, np.inf)
    limit = float(min(up.min(initial=np.inf), down.min(initial=np.inf)))
    return min(1.0, FRACTION_TO_BOUNDARY * limit)


def fit(d, tol=1e-8, max_iter=100, initial_theta=None):
    """Damped Newton minimisation of :func:`objective`.

    Each direction solves ``H step = -g`` (minimum-norm least squares when the
    contrasts do not span ``R^p``).  The step starts at the fraction-to-boundary
    limit and is halved until the Armijo condition holds, so every accepted
    iterate stays strictly feasible.

    Parameters
    ----------
    d : ContrastDesign
    tol : float, default 1e-8
        Convergence threshold on the Euclidean gradient norm.
    max_iter : int, default 100
    initial_theta : array-like of shape (p,), optional
        Must be feasible; default is the origin.

    Returns
    -------
    RegressionFit
        ``converged`` is False when ``max_iter`` is exhausted or the line
        search stalls; the trace is returned either way.  ``trace`` holds
        ``(objective, gradient norm, step length)`` per iterate and
        ``iterates`` the matching parameter vectors, starting point first.
    """
    theta = np.zeros(d.p) if initial_theta is None else np.array(initial_theta, dtype=np.float64)
    if theta.shape != (d.p,):
        raise ValueError(f"initial_theta must have shape ({d.p},)")
    f = objective(d, theta)  # raises FeasibilityError for a bad start
    g = gradient(d, theta)
    trace = [(f, float(np.linalg.norm(g)), 0.0)]
    iterates = [theta.copy()]
    converged = False
    it = 0
    while True:
        gnorm = float(np.linalg.norm(g))
        if gnorm <= tol:
            converged = True
            break
        if it >= max_iter:
            break
        H = hessian(d, theta)
        if d.full_rank:
            step = np.linalg.solve(H, -g)
        else:
            step = np.linalg.lstsq(H, -g, rcond=None)[0]
        slope = g @ step
        alpha = _max_step(linear_predictor(d, theta), d.delta_x @ step)
        while alpha >= 1e-16:
            cand = theta + alpha * step
            if feasibility_margin(d, cand) > 0:
                f_new = objective(d, cand)
                if f_new <= f + ARMIJO * alpha * slope:
                    break
            alpha *= 0.5
        else:
            logger.warning("line search stalled at iteration %d (|g| = %.3g)", it, gnorm)
            break
        it += 1
        theta, f = cand, f_new
        g = gradient(d, theta)
        trace.append((f, float(np.linalg.norm(g)), alpha))
        iterates.append(theta.copy())
    return RegressionFit(
        theta=theta,
        objective=f,
        gradient_norm=float(np.linalg.norm(g)),
        hessian=hessian(d, theta),
        iterations=it,
        converged=converged,
        feasibility_margin=feasibility_margin(d, theta),
        full_rank=d.full_rank,
        residual=estimating_equation_residual(d, theta),
        trace=trace,
        iterates=iterates,
    )
