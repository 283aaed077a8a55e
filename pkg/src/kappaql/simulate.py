"""Monte Carlo calibration and validation of the kappa estimator.

Every replicate draws from its own random stream, keyed by
``(seed, stream id, n, replicate)``, so results do not depend on the order
in which replicates are evaluated.
"""
import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .estimator import fast_kappa, hajek_terms
from .inference import VarianceModel, chi2_sf
from .scores import centred_scores

GENERATORS = ("continuous_gaussian", "discrete_uniform", "mixed_tied", "bivariate_gaussian")
STABILITY_GENERATORS = ("continuous_gaussian", "discrete_uniform", "mixed_tied")
C_BAND = (0.40, 0.49)
STABILITY_TOLERANCE = 0.05
#: Hoeffding rate for a mean of terms with variance proxy 16: exp(-N eps^2 / 32).
SUBGAUSSIAN_RATE = 1.0 / 32.0

_STREAM = {"calibrate": 1, "size": 2, "power": 3, "concentration": 4, "bias": 5}


@dataclass(frozen=True)
class SimConfig:
    """Monte Carlo settings.

    ``generator`` is one of :data:`GENERATORS`; ``k`` is the number of levels
    for ``discrete_uniform`` and ``rho`` the correlation for
    ``bivariate_gaussian``.  ``rhos`` lists alternatives for power studies.
    """

    generator: str = "continuous_gaussian"
    n_grid: tuple = (200,)
    replicates: int = 10000
    seed: int = 20240601
    alpha: float = 0.05
    k: int = 5
    rho: float = 0.0
    rhos: tuple = ()

    def __post_init__(self):
        if self.generator not in GENERATORS:
            raise ValueError(f"unknown generator {self.generator!r}; expected one of {GENERATORS}")
        object.__setattr__(self, "n_grid", tuple(int(n) for n in self.n_grid))
        object.__setattr__(self, "rhos", tuple(float(r) for r in self.rhos))
        if not self.n_grid or any(n < 5 for n in self.n_grid):
            raise ValueError("every n_grid entry must be >= 5")
        if self.replicates < 100:
            raise ValueError(f"replicates must be >= 100, got {self.replicates}")
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.k < 2:
            raise ValueError("k must be >= 2")
        if not -1 < self.rho < 1 or any(not -1 < r < 1 for r in self.rhos):
            raise ValueError("correlations must lie in (-1, 1)")
        if not 0 <= self.seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")

    def with_generator(self, generator, **kw):
        d = asdict(self)
        d.update(generator=generator, **kw)
        return SimConfig(**d)


@dataclass
class CalibrationReport:
    generator: str
    n_grid: tuple
    replicates: int
    seed: int
    c_hat: float = math.nan
    c_hat_stderr: float = math.nan
    c_by_n: dict = field(default_factory=dict)
    in_band: bool = False
    per_distribution: dict = field(default_factory=dict)
    stability_spread: float = math.nan
    stability_flag: bool = False
    baseline_c_kendall: float = math.nan
    hajek_term_variance: float = math.nan
    type_i_error: dict = field(default_factory=dict)
    power: dict = field(default_factory=dict)
    p_value_gap: dict = field(default_factory=dict)
    bias_table: dict = field(default_factory=dict)
    normality_stat: float = math.nan
    concentration_table: dict = field(default_factory=dict)

    def to_dict(self):
        """JSON-friendly dict; tuple keys become ``"a:b"`` strings."""
        def conv(v):
            if isinstance(v, dict):
                return {(":".join(map(str, k)) if isinstance(k, tuple) else str(k)): conv(x)
                        for k, x in v.items()}
            if isinstance(v, (list, tuple)):
                return [conv(x) for x in v]
            if isinstance(v, (np.floating, np.integer, np.bool_)):
                return v.item()
            return v
        return {k: conv(v) for k, v in asdict(self).items()}


# -- sampling ----------------------------------------------------------------

def _rng(seed, stream, n, rep):
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(stream, n, rep)))


def draw(cfg, rng, n):
    """One sample ``(x, y)`` of size ``n`` from the configured generator."""
    g = cfg.generator
    if g == "continuous_gaussian":
        return rng.standard_normal(n), rng.standard_normal(n)
    if g == "discrete_uniform":
        return (rng.integers(1, cfg.k + 1, size=n).astype(float),
                rng.integers(1, cfg.k + 1, size=n).astype(float))
    if g == "mixed_tied":
        # point mass at 0 (probability 0.4) mixed with a standard normal
        def one():
            v = rng.standard_normal(n)
            v[rng.random(n) < 0.4] = 0.0
            return v
        return one(), one()
    x = rng.standard_normal(n)
    y = cfg.rho * x + math.sqrt(1.0 - cfg.rho ** 2) * rng.standard_normal(n)
    return x, y


def population_tau(cfg):
    """Large-sample value of the kappa correlation under ``cfg``.

    Independent margins give exactly 0.  For continuous margins the centred
    score tends to ``sign(U - U') - 2 (U - U')`` on the copula scale, whose
    cross moment normalised by its variance 1/3 is ``3 tau_K - 2 rho_S``;
    for the Gaussian copula ``tau_K = 2/pi asin(rho)`` and
    ``rho_S = 6/pi asin(rho/2)``.
    """
    if cfg.generator != "bivariate_gaussian" or cfg.rho == 0.0:
        return 0.0
    tau_k = 2.0 / math.pi * math.asin(cfg.rho)
    rho_s = 6.0 / math.pi * math.asin(cfg.rho / 2.0)
    return 3.0 * tau_k - 2.0 * rho_s


def replicate_taus(cfg, n, stream="calibrate", replicates=None):
    """``(replicates, 2)`` array of ``(tau_cov, tau_corr)`` at sample size ``n``."""
    reps = cfg.replicates if replicates is None else replicates
    sid = _STREAM[stream] * 16 + GENERATORS.index(cfg.generator)
    out = np.empty((reps, 2))
    for r in range(reps):
        x, y = draw(cfg, _rng(cfg.seed, sid, n, r), n)
        out[r] = fast_kappa(x, y)
    return out


def _mean(v):
    return math.fsum(v) / len(v)


def _var(v):
    m = _mean(v)
    return math.fsum((np.asarray(v) - m) ** 2) / (len(v) - 1)


def kendall_tau_a(x, y):
    """Plain Kendall tau-a; a baseline comparator only."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = x.shape[0]
    s = np.sign(x[:, None] - x[None, :]) * np.sign(y[:, None] - y[None, :])
    return float(s.sum() / (n * (n - 1)))


# -- studies -----------------------------------------------------------------

def _c_estimate(taus, n, tau_pop):
    """``n Var(tau_hat) / (1 - tau**2)`` and its standard error from the fourth central moment."""
    v = _var(taus)
    m4 = _mean((taus - _mean(taus)) ** 4)
    se_v = math.sqrt(max(m4 - v * v, 0.0) / len(taus))
    scale = n / (1.0 - tau_pop ** 2)
    return scale * v, scale * se_v


def calibrate_c(cfg, stability_generators=STABILITY_GENERATORS, baseline=True):
    """Estimate the variance constant ``c`` by simulation.

    ``c_hat`` averages ``n Var(tau_corr) / (1 - tau**2)`` over ``cfg.n_grid``
    for ``cfg.generator``.  The same quantity is computed for each of
    ``stability_generators`` to report the spread across distributions.
    With ``baseline`` the Kendall tau-a constant is estimated alongside on
    the first grid point for comparison.
    """
    report = CalibrationReport(cfg.generator, cfg.n_grid, cfg.replicates, cfg.seed)
    tau_pop = population_tau(cfg)
    primary = {}

    def estimate(c):
        tp = population_tau(c)
        vals, ses = [], []
        for n in c.n_grid:
            taus = replicate_taus(c, n)[:, 1]
            v, s = _c_estimate(taus, n, tp)
            vals.append(v)
            ses.append(s)
            if c is cfg:
                primary[n] = taus
                report.c_by_n[n] = v
                report.bias_table[n] = _mean(taus) - tau_pop
        return _mean(vals), math.sqrt(math.fsum(s * s for s in ses)) / len(ses)

    report.c_hat, report.c_hat_stderr = estimate(cfg)
    report.in_band = C_BAND[0] <= report.c_hat <= C_BAND[1]
    for g in stability_generators:
        report.per_distribution[g] = (report.c_hat if g == cfg.generator
                                      else estimate(cfg.with_generator(g))[0])
    if report.per_distribution:
        vals = list(report.per_distribution.values())
        med = float(np.median(vals))
        report.stability_spread = max(abs(v - med) for v in vals)
        report.stability_flag = report.stability_spread > STABILITY_TOLERANCE

    n0 = cfg.n_grid[0]
    if baseline:
        ka = []
        hj = []
        for r in range(min(cfg.replicates, 2000)):
            x, y = draw(cfg, _rng(cfg.seed, 99, n0, r), n0)
            ka.append(kendall_tau_a(x, y))
            hj.append(hajek_terms(x, y).terms[0])
        report.baseline_c_kendall = n0 * _var(np.array(ka))
        report.hajek_term_variance = _var(np.array(hj))

    n_max = cfg.n_grid[-1]
    report.normality_stat = normality_distance(primary[n_max], n_max, tau_pop,
                                               VarianceModel(c=report.c_by_n[n_max]))
    return report


def normality_distance(taus, n, tau_pop, vm):
    """Kolmogorov-Smirnov distance of ``(tau_hat - tau) / se`` from N(0, 1)."""
    se = math.sqrt(vm.variance(tau_pop, n))
    return float(stats.kstest((np.asarray(taus) - tau_pop) / se, "norm").statistic)


def _vm_for(vm, n):
    if isinstance(vm, dict):
        return vm[n]
    return vm


def size_power_study(cfg, vm=VarianceModel(), report=None):
    """Rejection rates of the Wald and LR tests at level ``cfg.alpha``.

    Size is measured with independent margins (``cfg.generator``, or the
    continuous Gaussian when the configured generator is dependent).  Power
    uses the bivariate Gaussian at each of ``cfg.rhos``.  ``vm`` may be a
    dict keyed by sample size to use a separately calibrated ``c`` per ``n``.
    ``p_value_gap[n]`` is the median ``|p_wald - p_lrt|`` under the null.
    """
    if report is None:
        report = CalibrationReport(cfg.generator, cfg.n_grid, cfg.replicates, cfg.seed)
    null_cfg = cfg if cfg.generator != "bivariate_gaussian" else cfg.with_generator(
        "continuous_gaussian")
    for n in cfg.n_grid:
        pw, pl = null_p_values(null_cfg, n, _vm_for(vm, n))
        report.type_i_error[("wald", n)] = float(np.mean(pw < cfg.alpha))
        report.type_i_error[("lrt", n)] = float(np.mean(pl < cfg.alpha))
        report.p_value_gap[n] = float(np.median(np.abs(pw - pl)))
        for rho in cfg.rhos:
            alt = cfg.with_generator("bivariate_gaussian", rho=rho)
            pw, pl = null_p_values(alt, n, _vm_for(vm, n), stream="power")
            report.power[("wald", n, rho)] = float(np.mean(pw < cfg.alpha))
            report.power[("lrt", n, rho)] = float(np.mean(pl < cfg.alpha))
    return report


def null_p_values(cfg, n, vm, stream="size"):
    """Wald and LRT p-values for every replicate (vectorised forms of the tests)."""
    t = replicate_taus(cfg, n, stream=stream)[:, 1]
    t = np.clip(t, -1 + 1e-15, 1 - 1e-15)
    wald = vm.effective_n(n) * t * t / vm.c
    lrt = -2.0 * n * np.log1p(-t * t)
    sf = np.vectorize(chi2_sf, otypes=[float])
    return sf(wald), sf(lrt)


@dataclass
class ConcentrationRow:
    n: int
    epsilon: float
    exceedance: float
    bound: float


def concentration_check(cfg, epsilons=(0.05, 0.1, 0.2)):
    """Empirical ``P(|tau_hat - tau| > eps)`` over ``cfg.n_grid``.

    Returns a dict ``eps -> {"rows": [...], "decreasing": bool, "log_slope": float}``
    where ``bound`` is ``2 exp(-N eps^2 / 32)`` and ``log_slope`` is the
    least-squares slope of log-exceedance on ``n`` (NaN when fewer than two
    grid points have a non-zero exceedance).
    """
    tau_pop = population_tau(cfg)
    taus = {n: replicate_taus(cfg, n, stream="concentration")[:, 1] for n in cfg.n_grid}
    table = {}
    for eps in epsilons:
        rows = []
        for n in cfg.n_grid:
            exc = float(np.mean(np.abs(taus[n] - tau_pop) > eps))
            rows.append(ConcentrationRow(n, eps, exc, 2.0 * math.exp(-SUBGAUSSIAN_RATE * n * eps ** 2)))
        exc = np.array([r.exceedance for r in rows])
        ns = np.array([r.n for r in rows], dtype=float)
        pos = exc > 0
        slope = float(np.polyfit(ns[pos], np.log(exc[pos]), 1)[0]) if pos.sum() >= 2 else math.nan
        table[eps] = {
            "rows": rows,
            "decreasing": bool(np.all(np.diff(exc) < 0)),
            "log_slope": slope,
        }
    return table


# -- exact enumeration -------------------------------------------------------

class SupportTooLargeError(ValueError):
    pass


def exhaustive_unbiasedness(pmf, n, x_support=None, y_support=None):
    """Exact ``E[tau_cov]`` and ``E[Z_12]`` under a discrete joint pmf.

    Enumerates all ``cells**n`` samples of size ``n``.

    Parameters
    ----------
    pmf : array-like of shape (a, b), a, b <= 3
        Joint probabilities (normalised internally).
    n : int, 2 <= n <= 4
    x_support, y_support : array-like, optional
        Values of the two margins; default ``0, 1, ...``.

    Returns
    -------
    (exact_mean, population) : tuple of float
    """
    pmf = np.asarray(pmf, dtype=np.float64)
    if pmf.ndim != 2 or pmf.shape[0] > 3 or pmf.shape[1] > 3:
        raise SupportTooLargeError(f"support must be at most 3x3, got {pmf.shape}")
    if not 2 <= n <= 4:
        raise SupportTooLargeError(f"n must be in 2..4, got {n}")
    if np.any(pmf < 0) or pmf.sum() <= 0:
        raise ValueError("pmf must be non-negative with positive mass")
    pmf = pmf / pmf.sum()
    xs = np.arange(pmf.shape[0], dtype=float) if x_support is None else np.asarray(x_support, float)
    ys = np.arange(pmf.shape[1], dtype=float) if y_support is None else np.asarray(y_support, float)
    cells = [(xs[i], ys[j], pmf[i, j]) for i in range(pmf.shape[0])
             for j in range(pmf.shape[1]) if pmf[i, j] > 0]
    est_terms, pop_terms = [], []
    for sample in itertools.product(cells, repeat=n):
        w = math.prod(c[2] for c in sample)
        x = np.array([c[0] for c in sample])
        y = np.array([c[1] for c in sample])
        z = centred_scores(x).entries * centred_scores(y).entries
        est_terms.append(w * z.sum() / (n * (n - 1)))
        pop_terms.append(w * z[0, 1])
    return math.fsum(est_terms), math.fsum(pop_terms)
