"""Error metrics in physical units (watts)."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Metrics:
    rmse: float
    mae: float
    mape: float  # percent, over non-zero actuals only
    n: int
    n_zero_skipped: int = 0

    def as_dict(self):
        return {"rmse": self.rmse, "mae": self.mae, "mape": self.mape, "n": self.n,
                "n_zero_skipped": self.n_zero_skipped}


def _pair(actual, predicted):
    a = np.asarray(actual, dtype=np.float64).reshape(-1)
    p = np.asarray(predicted, dtype=np.float64).reshape(-1)
    if a.shape != p.shape:
        raise ValueError(f"length mismatch: {a.shape[0]} actual vs {p.shape[0]} predicted")
    if a.shape[0] == 0:
        raise ValueError("empty input")
    return a, p


def rmse(actual, predicted):
    a, p = _pair(actual, predicted)
    return float(np.sqrt(np.mean((p - a) ** 2)))


def mae(actual, predicted):
    a, p = _pair(actual, predicted)
    return float(np.mean(np.abs(p - a)))


def mape(actual, predicted):
    """Mean absolute percentage error; returns ``(percent, n_zero_skipped)``.

    Steps whose actual value is zero (PV at night) are left out of the mean.
    If every actual is zero the percentage is NaN.
    """
    a, p = _pair(actual, predicted)
    nz = a != 0
    skipped = int(a.shape[0] - nz.sum())
    if not nz.any():
        return float("nan"), skipped
    return float(100.0 * np.mean(np.abs((p[nz] - a[nz]) / a[nz]))), skipped


def evaluate(actual, predicted) -> Metrics:
    a, p = _pair(actual, predicted)
    pct, skipped = mape(a, p)
    return Metrics(rmse(a, p), mae(a, p), pct, int(a.shape[0]), skipped)


def improvement(best_rmse, runner_up_rmse):
    """Relative RMSE gain of the best model over the runner-up, in percent."""
    return 100.0 * (runner_up_rmse - best_rmse) / runner_up_rmse
