"""Input validation shared by the functional API and the estimators."""
import numpy as np
from sklearn.utils.validation import check_array


class DegenerateMarginError(ValueError):
    """Raised when a margin has no non-zero centred scores (e.g. a constant column)."""

    def __init__(self, margin, message=None):
        self.margin = margin
        super().__init__(message or f"degenerate margin {margin!r}: all centred scores are zero")


def check_observations(x, name="x", min_n=2):
    """Return ``x`` as a finite 1-d float array with at least ``min_n`` entries."""
    x = check_array(x, ensure_2d=False, dtype=np.float64, input_name=name,
                    ensure_min_samples=0)
    if x.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {x.shape}")
    if x.shape[0] < min_n:
        raise ValueError(f"{name} needs at least {min_n} observations, got {x.shape[0]}")
    return x


def check_square(m, name):
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    if m.shape[0] < 2:
        raise ValueError(f"{name} must be at least 2x2")
    return m


def check_tau(tau, closed=False):
    tau = float(tau)
    if not np.isfinite(tau):
        raise ValueError(f"tau must be finite, got {tau}")
    if closed:
        if abs(tau) > 1.0:
            raise ValueError(f"|tau| must be <= 1, got {tau}")
    elif abs(tau) >= 1.0:
        raise ValueError(f"|tau| must be < 1, got {tau}")
    return tau


def check_n(n, min_n=1):
    if int(n) != n or n < min_n:
        raise ValueError(f"sample size must be an integer >= {min_n}, got {n}")
    return int(n)
