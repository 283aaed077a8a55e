"""Quasi-likelihood inference for a single kappa correlation.

Tests target ``H0: tau = 0`` and are referred to a chi-square with one
degree of freedom.
"""
import math
import sys
from dataclasses import dataclass
from enum import Enum

from ._validation import check_n, check_tau

#: Default variance constant in ``Var(tau_hat) = c (1 - tau**2) / N``.
DEFAULT_C = 0.4456

#: Finite stand-in for an infinite test statistic at ``|tau_hat| = 1``.
BOUNDARY_STATISTIC = sys.float_info.max


class Denominator(str, Enum):
    N = "n"
    N_MINUS_2 = "n-2"


@dataclass(frozen=True)
class VarianceModel:
    """Variance constant ``c`` and the sample-size denominator (``n`` or ``n - 2``)."""

    c: float = DEFAULT_C
    denominator: Denominator = Denominator.N

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise ValueError(f"variance constant c must be positive, got {self.c}")
        object.__setattr__(self, "denominator", Denominator(self.denominator))

    def effective_n(self, n):
        n = check_n(n)
        if self.denominator is Denominator.N_MINUS_2:
            if n < 3:
                raise ValueError("denominator n-2 needs n >= 3")
            return n - 2
        return n

    def variance(self, tau, n):
        """``c (1 - tau**2) / denominator``."""
        tau = check_tau(tau, closed=True)
        return self.c * (1.0 - tau * tau) / self.effective_n(n)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # not a pytest class

    statistic: float
    family: str
    df: int
    p_value: float
    tau_hat: float
    n: int
    boundary: bool = False


def normal_cdf(t):
    """Standard normal CDF through ``erfc`` (relative error near machine precision)."""
    return 0.5 * math.erfc(-t / math.sqrt(2.0))


def chi2_sf(x):
    """Survival function of chi-square with one degree of freedom.

    ``P(chi2_1 > x) = 2 (1 - Phi(sqrt(x))) = erfc(sqrt(x / 2))``.
    """
    x = float(x)
    if math.isnan(x) or x < 0:
        raise ValueError(f"chi-square statistic must be >= 0, got {x}")
    return math.erfc(math.sqrt(x / 2.0))


def quasi_loglik(tau, n):
    """``-n log(1 - tau**2)``; grows without bound as ``|tau| -> 1``."""
    tau = check_tau(tau)
    return -check_n(n) * math.log1p(-tau * tau)


def wedderburn_quasi_loglik(tau, tau_hat, n, vm=VarianceModel()):
    """Data-dependent quasi-likelihood for the variance function ``c (1 - t**2) / n``.

    ``Q(tau) = integral_{tau_hat}^{tau} (tau_hat - t) / V(t) dt``, i.e.
    ``(n/c) [tau_hat atanh(t) + log(1 - t**2) / 2]`` evaluated between the
    limits.  It is zero and maximal at ``tau == tau_hat``, and its curvature
    there is ``1 / V(tau_hat)``, the inverse of :func:`standard_error` squared.
    """
    tau = check_tau(tau)
    tau_hat = check_tau(tau_hat)
    scale = vm.effective_n(n) / vm.c

    def antiderivative(t):
        return tau_hat * math.atanh(t) + 0.5 * math.log1p(-t * t)

    return scale * (antiderivative(tau) - antiderivative(tau_hat))


def quasi_loglik_moment_term(gamma3, gamma4, n):
    """The additive ``(1/n) sum_{k != l} gamma3 * gamma4`` term.

    It does not depend on ``tau`` and so never moves the maximiser; it is
    reported as a scalar diagnostic only.
    """
    n = check_n(n, 2)
    return (n - 1) * gamma3 * gamma4


def observed_information(tau, n):
    """``2 n (1 + tau**2) / (1 - tau**2)**2``; equals ``2 n`` at zero."""
    tau = check_tau(tau)
    t2 = tau * tau
    return 2.0 * check_n(n) * (1.0 + t2) / (1.0 - t2) ** 2


def standard_error(tau_hat, n, vm=VarianceModel()):
    """``sqrt(c (1 - tau_hat**2) / d)`` with ``d`` set by the variance model."""
    n = check_n(n, 3)
    return math.sqrt(vm.variance(tau_hat, n))


def heuristic_wald_variance(information, c=DEFAULT_C):
    """Diagnostic ``1.5 c / log(information)**2``.

    An empirical scaling with no derivation behind it; reported for
    comparison and never used to compute p-values.
    """
    if not information > 0 or information == 1.0:
        raise ValueError("information must be positive and != 1")
    return 1.5 * c / math.log(information) ** 2


def wald_test(tau_hat, n, vm=VarianceModel()):
    """Wald statistic ``n_eff * tau_hat**2 / c`` against chi-square(1).

    With the default variance model ``n_eff = n``; ``Denominator.N_MINUS_2``
    uses ``n - 2``.
    """
    tau_hat = check_tau(tau_hat)
    n = check_n(n)
    stat = vm.effective_n(n) * tau_hat * tau_hat / vm.c
    return TestResult(stat, "wald", 1, chi2_sf(stat), tau_hat, n)


def lr_test(tau_hat, n):
    """Quasi-likelihood ratio ``2 n log(1 / (1 - tau_hat**2))`` against chi-square(1)."""
    tau_hat = check_tau(tau_hat)
    n = check_n(n)
    stat = -2.0 * n * math.log1p(-tau_hat * tau_hat)
    return TestResult(stat, "lrt", 1, chi2_sf(stat), tau_hat, n)


def quasi_lr_test(tau_hat, n, vm=VarianceModel()):
    """Likelihood ratio built from :func:`wedderburn_quasi_loglik`.

    ``2 [Q(tau_hat) - Q(0)] = 2 (n_eff / c) [tau_hat atanh(tau_hat) + log(1 - tau_hat**2) / 2]``,
    which agrees with the Wald statistic to first order.  Unlike
    :func:`lr_test` it scales with ``c``.
    """
    tau_hat = check_tau(tau_hat)
    n = check_n(n)
    stat = max(-2.0 * wedderburn_quasi_loglik(0.0, tau_hat, n, vm), 0.0)
    return TestResult(stat, "quasi-lr", 1, chi2_sf(stat), tau_hat, n)


def boundary_result(family, tau_hat, n):
    """Result used when ``|tau_hat| == 1``: maximal statistic, ``p = 0``."""
    return TestResult(BOUNDARY_STATISTIC, family, 1, 0.0, float(tau_hat), int(n), True)


def edgeworth_density(t, mu, sigma, gamma3, gamma4):
    """Normal density at ``t`` times ``1 + gamma3/6 s**3 + gamma4/24 s**4``.

    ``s = (t - mu) / sigma``.  The correction is applied exactly as written
    (no Hermite polynomials), so it is a diagnostic curve rather than a
    normalised density whenever the moments are non-zero.
    """
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    s = (t - mu) / sigma
    phi = math.exp(-0.5 * s * s) / (sigma * math.sqrt(2.0 * math.pi))
    return phi * (1.0 + gamma3 / 6.0 * s ** 3 + gamma4 / 24.0 * s ** 4)
