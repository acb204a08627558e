import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.signal import lfilter

from heliofor.linear import (
    ArimaModel,
    ArmaModel,
    ConvergenceError,
    difference,
    fit_ar,
    fit_arima,
    fit_arma,
    fit_elastic_net,
    forecast_arima,
    forecast_arma,
    integrate,
    rank_features,
)


def simulate_arma(phi, theta, n, seed, mu=0.0, burn=500):
    rng = np.random.default_rng(seed)
    e = rng.standard_normal(n + burn)
    x = lfilter(np.r_[1.0, theta], np.r_[1.0, -np.asarray(phi, float)], e)
    return x[burn:] + mu


def test_ar1_recovery():
    m = fit_ar(simulate_arma([0.5], [], 10000, seed=1), 1)
    assert abs(m.phi[0] - 0.5) <= 0.05
    assert m.q == 0


def test_ar_white_noise():
    m = fit_ar(np.random.default_rng(2).standard_normal(10000), 2)
    assert np.all(np.abs(m.phi) <= 0.1)


def test_ar_constant_series():
    m = fit_ar(np.full(50, 4.2), 1)
    np.testing.assert_allclose(forecast_arma(m, np.full(5, 4.2), 3), 4.2)


def test_ar_rank_deficient():
    y = np.tile([1.0, -1.0], 30)
    with pytest.raises(np.linalg.LinAlgError, match="rank deficient"):
        fit_ar(y, 2)


def test_ar_too_short():
    with pytest.raises(ValueError, match="too short"):
        fit_ar(np.arange(10.0), 1)


def test_arma11_recovery():
    m = fit_arma(simulate_arma([0.6], [0.3], 20000, seed=3), 1, 1)
    assert abs(m.phi[0] - 0.6) <= 0.1
    assert abs(m.theta[0] - 0.3) <= 0.1
    assert m.sigma2 == pytest.approx(1.0, rel=0.05)


def test_ma1_recovery():
    m = fit_arma(simulate_arma([], [0.4], 20000, seed=4), 0, 1)
    assert abs(m.theta[0] - 0.4) <= 0.1


def test_arma_q0_reduces_to_ar():
    y = simulate_arma([0.5, -0.2], [], 3000, seed=5, mu=2.0)
    a, b = fit_arma(y, 2, 0), fit_ar(y, 2)
    np.testing.assert_allclose(a.phi, b.phi, atol=1e-8)
    assert a.mu == pytest.approx(b.mu, abs=1e-8)


def test_arma_nonconvergence_carries_best():
    y = simulate_arma([0.6], [0.3], 2000, seed=6)
    with pytest.raises(ConvergenceError) as info:
        fit_arma(y, 1, 1, max_nfev=1)
    assert isinstance(info.value.best, ArmaModel)


def test_forecast_ar1_geometric():
    m = ArmaModel(1, 0, [0.5], [], 0.0, 1.0)
    np.testing.assert_allclose(forecast_arma(m, [3.0, 8.0], 4), [4.0, 2.0, 1.0, 0.5], rtol=0, atol=1e-15)
    assert forecast_arma(m, [8.0], 0).shape == (0,)


def test_forecast_ma1_cutoff():
    m = ArmaModel(0, 1, [], [0.4], 1.5, 1.0)
    fc = forecast_arma(m, simulate_arma([], [0.4], 100, seed=7, mu=1.5), 5)
    np.testing.assert_array_equal(fc[1:], 1.5)


def test_forecast_converges_to_mean_bound():
    phi, mu, y0 = 0.7, 2.0, 9.0
    m = ArmaModel(1, 0, [phi], [], mu, 1.0)
    fc = forecast_arma(m, [y0], 30)
    h = np.arange(1, 31)
    assert np.all(np.abs(fc - mu) <= np.abs(phi) ** h * abs(y0 - mu) + 1e-9)


def test_forecast_insufficient_history():
    with pytest.raises(ValueError):
        forecast_arma(ArmaModel(2, 0, [0.1, 0.1], [], 0.0, 1.0), [1.0], 2)


def test_difference_examples():
    np.testing.assert_array_equal(difference([1, 3, 6, 10], 1), [2, 3, 4])
    np.testing.assert_array_equal(difference([1, 3, 6, 10], 0), [1, 3, 6, 10])
    with pytest.raises(ValueError):
        difference([1, 2], 2)


@settings(max_examples=200, deadline=None)
@given(st.lists(st.integers(-10**6, 10**6), min_size=4, max_size=60), st.integers(0, 3))
def test_integrate_exact_on_grid_values(ints, d):
    s = np.array(ints, dtype=np.float64) / 1024.0
    assert np.array_equal(integrate(difference(s, d), s[:d], d), s)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=4, max_size=60), st.integers(0, 3))
def test_integrate_general_floats_to_rounding(values, d):
    s = np.array(values)
    back = integrate(difference(s, d), s[:d], d)
    scale = max(1.0, np.abs(s).max())
    assert np.max(np.abs(back - s)) <= 1e-12 * scale * 8 ** d


def test_arima_d0_matches_inner():
    y = simulate_arma([0.5], [0.2], 3000, seed=8)
    m = fit_arima(y, 1, 0, 1)
    np.testing.assert_allclose(forecast_arima(m, y, 10), forecast_arma(m.inner, y, 10), atol=1e-10)


def test_arima_d1_on_random_walk_with_drift():
    y = np.cumsum(0.5 + simulate_arma([0.4], [], 4000, seed=10))
    m = fit_arima(y, 1, 1, 0)
    assert isinstance(m, ArimaModel) and m.d == 1
    fc = forecast_arima(m, y, 50)
    assert fc[-1] > y[-1]  # positive drift carries on


def _ols(X, y):
    A = np.column_stack([np.ones(len(y)), X])
    return np.linalg.solve(A.T @ A, A.T @ y)


def test_elastic_net_lambda0_is_ols():
    rng = np.random.default_rng(11)
    X = rng.standard_normal((300, 4)) * [1, 10, 0.1, 3]
    y = X @ [1.0, -0.2, 5.0, 0.0] + 2.0 + 0.1 * rng.standard_normal(300)
    m = fit_elastic_net(X, y, 0.0, 0.5)
    beta = _ols(X, y)
    raw = m.coefficients / m.scales
    np.testing.assert_allclose(raw, beta[1:], atol=1e-6)
    np.testing.assert_allclose(m.predict(X), np.column_stack([np.ones(300), X]) @ beta, atol=1e-6)


def test_elastic_net_sparse_recovery():
    rng = np.random.default_rng(12)
    X = rng.standard_normal((500, 2))
    y = 3 * X[:, 0] + 0.1 * rng.standard_normal(500)
    m = fit_elastic_net(X, y, 0.1, 1.0)
    assert abs(m.coefficients[0]) > 10 * abs(m.coefficients[1])
    assert m.coefficients[1] == 0.0


def test_elastic_net_constant_target():
    X = np.random.default_rng(13).standard_normal((40, 3))
    m = fit_elastic_net(X, np.full(40, 7.0), 0.1, 0.5)
    assert np.all(m.coefficients == 0) and m.intercept == 7.0


def test_elastic_net_l1_path_monotone():
    rng = np.random.default_rng(14)
    X = rng.standard_normal((200, 5))
    y = X @ [2.0, -1.0, 0.5, 0.0, 0.3] + 0.2 * rng.standard_normal(200)
    norms = [np.abs(fit_elastic_net(X, y, lam, 0.7).coefficients).sum() for lam in np.geomspace(1e-4, 3, 15)]
    assert all(b <= a + 1e-9 for a, b in zip(norms, norms[1:]))


def test_elastic_net_shape_errors():
    with pytest.raises(ValueError):
        fit_elastic_net(np.ones((3, 2)), np.ones(4), 0.1, 0.5)


def test_rank_features_examples():
    class M:
        coefficients = np.array([0.9, -0.1])

    r = rank_features(M, ["a", "b"])
    assert r[0] == ("a", pytest.approx(0.9))
    M.coefficients = np.zeros(3)
    r = rank_features(M, ["x", "y", "z"])
    assert r.no_signal and [v for _, v in r] == [1 / 3] * 3
    M.coefficients = np.array([0.5, 0.5])
    assert rank_features(M, ["p", "q"]).names() == ["p", "q"]
    with pytest.raises(ValueError):
        rank_features(M, ["only"])
