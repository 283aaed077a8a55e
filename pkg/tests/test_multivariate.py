import math

import numpy as np
import pytest

from kappaql import DegenerateMarginError, VarianceModel, kappa_estimate
from kappaql.multivariate import (joint_quasi_loglik, joint_wedderburn_loglik, kappa_matrix,
                                  matrix_tests)


@pytest.fixture
def data(rng):
    x = rng.standard_normal((25, 4))
    x[:, 3] = np.round(x[:, 0] ** 2, 1)
    return x


def test_entries_match_pairwise(data):
    m = kappa_matrix(data, names="abcd")
    assert m.dim == 4 and m.n == 25 and m.names == tuple("abcd")
    np.testing.assert_array_equal(m.entries, m.entries.T)
    np.testing.assert_array_equal(np.diag(m.entries), 1.0)
    for a in range(4):
        for b in range(a + 1, 4):
            est = kappa_estimate(data[:, a], data[:, b])
            assert m.entries[a, b] == pytest.approx(est.tau_corr, abs=1e-15)
            assert m.covariance[a, b] == pytest.approx(est.tau_cov, abs=1e-15)


def test_list_of_columns_input(data):
    a = kappa_matrix(data)
    b = kappa_matrix([data[:, j] for j in range(4)])
    np.testing.assert_array_equal(a.entries, b.entries)


def test_degenerate_column_index(data):
    data[:, 2] = 1.0
    with pytest.raises(DegenerateMarginError) as info:
        kappa_matrix(data)
    assert info.value.margin == 2


def test_shape_errors():
    with pytest.raises(ValueError):
        kappa_matrix([np.arange(5.0)])
    with pytest.raises(ValueError):
        kappa_matrix([np.arange(5.0), np.arange(4.0)])
    with pytest.raises(ValueError):
        kappa_matrix(np.ones((5, 2)), names=["a"])


def test_pair_tests(data):
    m = kappa_matrix(data, vm=VarianceModel())
    assert set(m.tests) == {(a, b) for a in range(4) for b in range(a + 1, 4)}
    rows = matrix_tests(m)
    assert len(rows) == 6
    for (a, b), wald, lrt in rows:
        assert wald.family == "wald" and lrt.family == "lrt"
        assert wald.tau_hat == m.entries[a, b]
        assert 0.0 <= wald.p_value <= 1.0


def test_boundary_pair():
    x = np.arange(10.0)
    m = kappa_matrix([x, 2 * x, np.sin(x)])
    (key, wald, lrt), *_ = matrix_tests(m)
    assert key == (0, 1) and wald.boundary and lrt.p_value == 0.0


def test_joint_logliks(data):
    m = kappa_matrix(data)
    t = m.entries
    iu = np.triu_indices(4, 1)
    expected = -25 * np.sum(np.log1p(-t[iu] ** 2))
    assert joint_quasi_loglik(t, 25) == pytest.approx(expected)
    assert joint_quasi_loglik(np.ones((2, 2)), 25) == math.inf
    assert joint_wedderburn_loglik(t, t, 25) == 0.0
    shifted = t + 0.05 * (1 - np.eye(4))
    assert joint_wedderburn_loglik(shifted, t, 25) < 0.0


def test_psd_is_diagnostic(data):
    assert isinstance(kappa_matrix(data).is_psd(), bool)
