"""Classical baselines: AR/ARMA/ARIMA by conditional sum of squares, and
elastic-net feature ranking."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from . import kernels


class ConvergenceError(RuntimeError):
    """Optimiser stopped without converging; ``best`` holds the last iterate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


@dataclass(frozen=True, eq=False)
class ArmaModel:
    """``Y_t - mu = sum phi_k (Y_{t-k} - mu) + e_t + sum theta_k e_{t-k}``."""

    p: int
    q: int
    phi: np.ndarray
    theta: np.ndarray
    mu: float
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "phi", np.asarray(self.phi, dtype=np.float64).reshape(-1))
        object.__setattr__(self, "theta", np.asarray(self.theta, dtype=np.float64).reshape(-1))
        if self.p < 0 or self.q < 0:
            raise ValueError("orders must be non-negative")
        if self.phi.shape[0] != self.p or self.theta.shape[0] != self.q:
            raise ValueError("coefficient lengths must match the declared orders")
        if self.sigma2 < 0:
            raise ValueError("sigma2 must be non-negative")


@dataclass(frozen=True, eq=False)
class ArimaModel:
    inner: ArmaModel
    d: int

    def __post_init__(self):
        if self.d < 0:
            raise ValueError("d must be non-negative")


def _check_length(series, p, q=0):
    need = 10 * max(p + q, 1)
    if series.shape[0] <= need:
        raise ValueError(f"series too short: need more than {need} points")


def fit_ar(series, p: int) -> ArmaModel:
    """Least-squares AR(p) on the demeaned series (conditional on the first p points)."""
    y = np.asarray(series, dtype=np.float64)
    if p < 1:
        raise ValueError("p must be >= 1")
    _check_length(y, p)
    mu = float(y.mean())
    z = y - mu
    if not np.any(z):
        return ArmaModel(p, 0, np.zeros(p), np.zeros(0), mu, 0.0)
    n = z.shape[0]
    X = np.column_stack([z[p - k - 1:n - k - 1] for k in range(p)])
    target = z[p:]
    if np.linalg.matrix_rank(X) < p:
        raise np.linalg.LinAlgError("rank deficient")
    phi, *_ = np.linalg.lstsq(X, target, rcond=None)
    resid = target - X @ phi
    return ArmaModel(p, 0, phi, np.zeros(0), mu, float(resid @ resid / resid.shape[0]))


def css_residuals(series, phi, theta, mu):
    """Conditional innovations of ``series`` under the given coefficients."""
    z = np.asarray(series, dtype=np.float64) - mu
    e, _ = kernels.arma_css(z, np.asarray(phi, dtype=np.float64), np.asarray(theta, dtype=np.float64))
    return e


def fit_arma(series, p: int, q: int, max_nfev: int = 200) -> ArmaModel:
    """Conditional-sum-of-squares ARMA(p, q).

    The mean is fixed at the sample mean; ``(phi, theta)`` are refined by
    Levenberg-Marquardt starting from the AR least-squares estimate, with the
    innovations and their exact Jacobian recomputed by recursion at every
    evaluation. With ``q == 0`` the problem is linear and the start point is
    already optimal.
    """
    y = np.asarray(series, dtype=np.float64)
    if p < 0 or q < 0 or p + q < 1:
        raise ValueError("need p, q >= 0 and p + q >= 1")
    _check_length(y, p, q)
    if p > 0:
        start = fit_ar(y, p)
        phi0, mu = start.phi, start.mu
    else:
        phi0, mu = np.zeros(0), float(y.mean())
    z = y - mu
    if not np.any(z):
        return ArmaModel(p, q, np.zeros(p), np.zeros(q), mu, 0.0)

    def resid(params):
        e, _ = kernels.arma_css(z, params[:p].copy(), params[p:].copy())
        return e[p:]

    def jac(params):
        _, J = kernels.arma_css(z, params[:p].copy(), params[p:].copy())
        return J

    x0 = np.concatenate([phi0, np.zeros(q)])
    if q == 0:
        best = x0
    else:
        res = least_squares(resid, x0, jac=jac, method="lm", max_nfev=max_nfev, xtol=1e-12, ftol=1e-12)
        if res.status <= 0:
            raise ConvergenceError(
                f"ARMA({p},{q}) did not converge within {max_nfev} evaluations",
                best=ArmaModel(p, q, res.x[:p], res.x[p:], mu, float(np.mean(res.fun ** 2))),
            )
        best = res.x
    e = resid(best)
    return ArmaModel(p, q, best[:p], best[p:], mu, float(e @ e / e.shape[0]))


def forecast_arma(model: ArmaModel, history, horizon: int) -> np.ndarray:
    """Recursive forecasts with future innovations set to zero."""
    y = np.asarray(history, dtype=np.float64)
    p, q = model.p, model.q
    if horizon < 0:
        raise ValueError("horizon must be >= 0")
    if y.shape[0] < max(p, q, 1):
        raise ValueError("insufficient history")
    if horizon == 0:
        return np.zeros(0)
    z = y - model.mu
    e = css_residuals(y, model.phi, model.theta, model.mu) if q else np.zeros_like(z)
    zs = list(z)
    es = list(e)
    out = np.empty(horizon)
    for h in range(horizon):
        val = 0.0
        for k in range(p):
            val += model.phi[k] * zs[-k - 1]
        for k in range(q):
            val += model.theta[k] * es[-k - 1]
        zs.append(val)
        es.append(0.0)
        out[h] = val + model.mu
    return out


def difference(series, d: int) -> np.ndarray:
    s = np.asarray(series, dtype=np.float64)
    if d < 0:
        raise ValueError("d must be >= 0")
    if d >= s.shape[0]:
        raise ValueError("d must be smaller than the series length")
    return np.diff(s, n=d) if d else s.copy()


def integrate(diffs, seeds, d: int) -> np.ndarray:
    """Undo :func:`difference` given the first ``d`` values of the original series.

    Reconstruction is a left-to-right running sum per level, so it is exact
    whenever the differences themselves were exact (e.g. data on a fixed
    decimal or integer grid); otherwise it is exact to rounding.
    """
    out = np.asarray(diffs, dtype=np.float64)
    seeds = np.asarray(seeds, dtype=np.float64)
    if d < 0:
        raise ValueError("d must be >= 0")
    if seeds.shape[0] != d:
        raise ValueError("need exactly d seed values")
    heads = []
    level = seeds
    for _ in range(d):
        heads.append(level[0])
        level = np.diff(level)
    for head in reversed(heads):
        out = np.cumsum(np.concatenate(([head], out)))
    return out


def fit_arima(series, p: int, d: int, q: int) -> ArimaModel:
    """Difference ``d`` times, then fit ARMA(p, q) (or AR(p) when q == 0)."""
    dz = difference(series, d)
    inner = fit_arma(dz, p, q) if q else fit_ar(dz, p)
    return ArimaModel(inner, d)


def forecast_arima(model: ArimaModel, history, horizon: int) -> np.ndarray:
    y = np.asarray(history, dtype=np.float64)
    if model.d == 0:
        return forecast_arma(model.inner, y, horizon)
    if y.shape[0] <= model.d:
        raise ValueError("insufficient history")
    dz = difference(y, model.d)
    fc = forecast_arma(model.inner, dz, horizon)
    full = integrate(np.concatenate([dz, fc]), y[:model.d], model.d)
    return full[y.shape[0]:]


# ---------------------------------------------------------------------------
# Elastic net
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ElasticNetModel:
    """Elastic net fitted on standardised features.

    ``coefficients`` are on the standardised scale (one unit = one training
    standard deviation), which is what makes their magnitudes comparable for
    ranking. ``intercept`` is the training mean of ``y``.
    """

    coefficients: np.ndarray
    intercept: float
    lam: float
    l1_ratio: float
    means: np.ndarray
    scales: np.ndarray
    n_iter: int = 0

    def predict(self, X):
        Z = (np.asarray(X, dtype=np.float64) - self.means) / self.scales
        return Z @ self.coefficients + self.intercept


def fit_elastic_net(X, y, lam: float, l1_ratio: float, tol: float = 1e-10, max_iter: int = 100_000) -> ElasticNetModel:
    """Coordinate descent on ``1/(2n)||y - Xw||^2 + lam*(a||w||_1 + (1-a)/2 ||w||^2)``.

    Features are centred and divided by their population standard deviation
    first; constant features keep a zero coefficient.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("X rows must match len(y)")
    if X.shape[0] == 0:
        raise ValueError("empty input")
    if lam < 0 or not 0.0 <= l1_ratio <= 1.0:
        raise ValueError("need lam >= 0 and l1_ratio in [0, 1]")
    means = X.mean(axis=0)
    scales = X.std(axis=0)
    scales[scales == 0] = 1.0
    Z = (X - means) / scales
    y_mean = float(y.mean())
    w, n_iter, change = kernels.elastic_net_cd(
        np.ascontiguousarray(Z.T), y - y_mean, float(lam), float(l1_ratio), float(tol), int(max_iter)
    )
    if change >= tol:
        raise ConvergenceError(f"coordinate descent stopped at max change {change:.3g} after {n_iter} sweeps")
    return ElasticNetModel(w, y_mean, lam, l1_ratio, means, scales, n_iter)


@dataclass(frozen=True)
class FeatureRanking:
    items: tuple
    no_signal: bool = False

    def names(self):
        return [name for name, _ in self.items]

    def __iter__(self):
        return iter(self.items)

    def __len__(self):
        return len(self.items)

    def __getitem__(self, i):
        return self.items[i]


def rank_features(model: ElasticNetModel, names) -> FeatureRanking:
    """Sort features by |coefficient|, importances normalised to sum to one.

    Equal magnitudes keep input order. An all-zero coefficient vector yields
    uniform importances with ``no_signal`` set.
    """
    names = list(names)
    coef = np.abs(np.asarray(model.coefficients, dtype=np.float64))
    if len(names) != coef.shape[0]:
        raise ValueError("need one name per coefficient")
    total = coef.sum()
    if total == 0:
        share = 1.0 / len(names)
        return FeatureRanking(tuple((n, share) for n in names), no_signal=True)
    order = np.argsort(-coef, kind="stable")
    return FeatureRanking(tuple((names[i], float(coef[i] / total)) for i in order))
