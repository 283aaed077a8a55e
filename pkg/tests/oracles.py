"""Brute-force reference implementations used only by the tests.

Nothing here imports kappaql: scores, centring and sums are recomputed with
plain Python loops so that agreement with the library is meaningful.
"""
import itertools
import math
from dataclasses import dataclass

import mpmath

BRUTE_MAX_N = 200


class OracleSizeError(ValueError):
    pass


@dataclass
class OracleResult:
    value: object
    method: str
    cost: int


def _scores(v):
    n = len(v)
    return [[0 if k == l else (1 if v[k] >= v[l] else -1) for l in range(n)] for k in range(n)]


def _centred(v):
    n = len(v)
    c = _scores(v)
    row = [math.fsum(c[k]) / (n - 1) for k in range(n)]
    col = [math.fsum(c[k][l] for k in range(n)) / (n - 1) for l in range(n)]
    grand = math.fsum(math.fsum(r) for r in c) / (n * n - n)
    return [[0.0 if k == l else c[k][l] - row[k] - col[l] + grand for l in range(n)]
            for k in range(n)]


def brute_tau(x, y):
    """``(tau_cov, tau_corr)`` by explicit loops over every ordered pair."""
    x = [float(v) for v in x]
    y = [float(v) for v in y]
    n = len(x)
    if n > BRUTE_MAX_N:
        raise OracleSizeError(f"brute_tau is capped at N = {BRUTE_MAX_N}, got {n}")
    if n != len(y) or n < 2:
        raise ValueError("x and y need equal length >= 2")
    kx = _centred(x)
    ky = _centred(y)
    cross, sx, sy = [], [], []
    for k in range(n):
        for l in range(n):
            if k != l:
                cross.append(kx[k][l] * ky[k][l])
                sx.append(kx[k][l] ** 2)
                sy.append(ky[k][l] ** 2)
    m = n * (n - 1)
    cov = math.fsum(cross) / m
    corr = math.fsum(cross) / math.sqrt(math.fsum(sx) * math.fsum(sy))
    return OracleResult((cov, corr), "triple loop over ordered pairs", 3 * n ** 3)


def finite_diff_grad(f, theta, h=1e-6):
    """Central differences of a scalar function, one coordinate at a time."""
    if not 1e-7 <= h <= 1e-4:
        raise ValueError("h must lie in [1e-7, 1e-4]")
    theta = [float(t) for t in theta]
    out = []
    for j in range(len(theta)):
        up = list(theta)
        dn = list(theta)
        up[j] += h
        dn[j] -= h
        out.append((f(up) - f(dn)) / (2.0 * h))
    return out


def finite_diff_jacobian(g, theta, h=1e-6):
    """Central-difference Jacobian of a vector function; rows follow ``g``'s output."""
    theta = [float(t) for t in theta]
    cols = []
    for j in range(len(theta)):
        up = list(theta)
        dn = list(theta)
        up[j] += h
        dn[j] -= h
        gu, gd = g(up), g(dn)
        cols.append([(a - b) / (2.0 * h) for a, b in zip(gu, gd)])
    return [list(r) for r in zip(*cols)]


def exact_expectation(pmf, n, xs=None, ys=None):
    """Exact ``(E[tau_cov], E[Z_12])`` by enumerating every sample of size ``n``."""
    rows = len(pmf)
    cols = len(pmf[0])
    if rows > 3 or cols > 3 or not 2 <= n <= 4:
        raise OracleSizeError("support must be at most 3x3 and n in 2..4")
    xs = list(range(rows)) if xs is None else list(xs)
    ys = list(range(cols)) if ys is None else list(ys)
    total = math.fsum(math.fsum(r) for r in pmf)
    cells = [(xs[i], ys[j], pmf[i][j] / total) for i in range(rows) for j in range(cols)
             if pmf[i][j] > 0]
    est, pop = [], []
    count = 0
    for sample in itertools.product(cells, repeat=n):
        count += 1
        w = math.prod(s[2] for s in sample)
        kx = _centred([s[0] for s in sample])
        ky = _centred([s[1] for s in sample])
        z = [kx[k][l] * ky[k][l] for k in range(n) for l in range(n) if k != l]
        est.append(w * math.fsum(z) / (n * (n - 1)))
        pop.append(w * kx[0][1] * ky[0][1])
    return OracleResult((math.fsum(est), math.fsum(pop)), "exhaustive enumeration", count)


def normal_cdf_mp(t, dps=40):
    """Standard normal CDF at high precision."""
    with mpmath.workdps(dps):
        return float(mpmath.ncdf(mpmath.mpf(t)))


def chi2_1_sf_mp(x, dps=40):
    with mpmath.workdps(dps):
        return float(mpmath.erfc(mpmath.sqrt(mpmath.mpf(x) / 2)))


def regression_root_1d(x, y, iters=200):
    """Scalar regression coefficient by bisection on the estimating equation.

    Uses equal weights over ordered pairs and the centred scores of ``y``.
    The left side is increasing in ``theta`` on the feasible interval.
    """
    n = len(x)
    ky = _centred([float(v) for v in y])
    span = max(abs(x[i] - x[j]) for i in range(n) for j in range(n))

    def eq(t):
        terms = []
        for i in range(n):
            for j in range(n):
                if i != j:
                    dx = x[i] - x[j]
                    e = dx * t
                    terms.append((2 * e / (1 - e * e) - ky[i][j]) * dx)
        return math.fsum(terms)

    lo, hi = -(1 - 1e-12) / span, (1 - 1e-12) / span
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if eq(mid) > 0:
            hi = mid
        else:
            lo = mid
    return OracleResult(0.5 * (lo + hi), "bisection", iters * n * n)
