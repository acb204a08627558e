"""NARX network: a sigmoid/linear two-layer net over tapped delay lines.

Trained open loop (series-parallel: output lags are the measured values) and
run closed loop (parallel: output lags are the network's own predictions).
``d_y = 0`` removes the feedback path and leaves a time-delay network.
"""

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np

from . import kernels
from .core import Dataset, SupervisedWindows, regressor_matrix

log = logging.getLogger(__name__)

CLOSED_LOOP_BOUND = 10.0


class DivergedError(RuntimeError):
    def __init__(self, epoch, message=None):
        super().__init__(message or f"diverged: non-finite loss at epoch {epoch}")
        self.epoch = epoch


class ClosedLoopClampWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class NarxConfig:
    d_u: int = 2
    d_y: int = 2
    hidden_units: int = 10
    learning_rate: float = 0.1
    epochs: int = 30
    seed: int = 0
    batch_size: int = 32

    def __post_init__(self):
        if self.d_u < 1 or self.d_y < 0:
            raise ValueError("need d_u >= 1 and d_y >= 0")
        if self.hidden_units < 1 or self.batch_size < 1:
            raise ValueError("hidden_units and batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")

    @property
    def max_lag(self):
        return max(self.d_u, self.d_y)

    def regressor_length(self, n_features):
        return self.d_u * n_features + self.d_y


@dataclass(frozen=True, eq=False)
class NarxNetwork:
    input_weights: np.ndarray
    input_bias: np.ndarray
    output_weights: np.ndarray
    output_bias: float
    config: NarxConfig
    loss_trace: tuple = field(default=())

    def __post_init__(self):
        W1 = np.ascontiguousarray(self.input_weights, dtype=np.float64)
        b1 = np.ascontiguousarray(self.input_bias, dtype=np.float64)
        w2 = np.ascontiguousarray(self.output_weights, dtype=np.float64)
        if W1.ndim != 2 or b1.shape != (W1.shape[0],) or w2.shape != (W1.shape[0],):
            raise ValueError("inconsistent NARX weight shapes")
        object.__setattr__(self, "input_weights", W1)
        object.__setattr__(self, "input_bias", b1)
        object.__setattr__(self, "output_weights", w2)
        object.__setattr__(self, "output_bias", float(self.output_bias))

    @property
    def hidden_units(self):
        return self.input_weights.shape[0]

    @property
    def regressor_length(self):
        return self.input_weights.shape[1]

    @property
    def n_features(self):
        return (self.regressor_length - self.config.d_y) // self.config.d_u

    def params(self):
        return {
            "input_weights": self.input_weights,
            "input_bias": self.input_bias,
            "output_weights": self.output_weights,
            "output_bias": np.array([self.output_bias]),
        }

    def with_params(self, **arrays):
        p = {k: v for k, v in self.params().items()}
        p.update(arrays)
        return replace(
            self,
            input_weights=p["input_weights"],
            input_bias=p["input_bias"],
            output_weights=p["output_weights"],
            output_bias=float(np.asarray(p["output_bias"]).reshape(-1)[0]),
        )

    def equals(self, other):
        return self.config == other.config and all(
            np.array_equal(a, b) for a, b in zip(self.params().values(), other.params().values())
        )


def init_network(cfg: NarxConfig, n_features: int) -> NarxNetwork:
    """Seeded uniform(+-1/sqrt(fan_in)) weights, zero biases."""
    rng = np.random.default_rng(cfg.seed)
    p = cfg.regressor_length(n_features)
    H = cfg.hidden_units
    W1 = rng.uniform(-1.0, 1.0, size=(H, p)) / np.sqrt(p)
    w2 = rng.uniform(-1.0, 1.0, size=H) / np.sqrt(H)
    return NarxNetwork(W1, np.zeros(H), w2, 0.0, cfg)


def _check_regressor(net, R):
    R = np.ascontiguousarray(R, dtype=np.float64)
    if R.shape[-1] != net.regressor_length:
        raise ValueError(f"regressor length {R.shape[-1]} != {net.regressor_length}")
    return R


def narx_forward(net: NarxNetwork, regressor) -> float:
    r = _check_regressor(net, regressor)
    if r.ndim != 1:
        raise ValueError("narx_forward takes a single regressor vector")
    return float(narx_predict(net, r[None, :])[0])


def narx_predict(net: NarxNetwork, R) -> np.ndarray:
    """Row-wise forward pass over a regressor matrix."""
    R = _check_regressor(net, R)
    return kernels.narx_forward_rows(
        net.input_weights, net.input_bias, net.output_weights, net.output_bias, R
    )


@dataclass(frozen=True)
class NarxGradients:
    input_weights: np.ndarray
    input_bias: np.ndarray
    output_weights: np.ndarray
    output_bias: float

    def as_dict(self):
        return {
            "input_weights": self.input_weights,
            "input_bias": self.input_bias,
            "output_weights": self.output_weights,
            "output_bias": np.array([self.output_bias]),
        }


def narx_loss(net, R, y):
    err = narx_predict(net, R) - np.asarray(y, dtype=np.float64)
    return float(np.mean(err * err))


def narx_gradients(net: NarxNetwork, R, y) -> NarxGradients:
    """Analytic gradient of the batch MSE."""
    R = _check_regressor(net, np.atleast_2d(R))
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if R.shape[0] == 0 or R.shape[0] != y.shape[0]:
        raise ValueError("batch must be non-empty with one target per row")
    m = R.shape[0]
    A = R @ net.input_weights.T + net.input_bias
    S = 1.0 / (1.0 + np.exp(-A))
    err = S @ net.output_weights + net.output_bias - y
    d_pred = 2.0 * err / m
    dA = np.outer(d_pred, net.output_weights) * S * (1.0 - S)
    return NarxGradients(dA.T @ R, dA.sum(axis=0), d_pred @ S, float(d_pred.sum()))


def train_series_parallel(data: SupervisedWindows, cfg: NarxConfig, init: NarxNetwork = None) -> NarxNetwork:
    """Mini-batch gradient descent on open-loop windows.

    Rows are reshuffled every epoch from a generator seeded with ``cfg.seed``;
    the recorded loss trace is the full-data MSE after each epoch.
    """
    if data.d_u != cfg.d_u or data.d_y != cfg.d_y:
        raise ValueError("windows were built with different memory orders")
    if len(data) == 0:
        raise ValueError("no training windows")
    X = np.ascontiguousarray(data.inputs, dtype=np.float64)
    y = np.ascontiguousarray(data.targets, dtype=np.float64)
    n_features = (X.shape[1] - cfg.d_y) // cfg.d_u
    net = init if init is not None else init_network(cfg, n_features)
    if cfg.epochs == 0:
        return net
    W1 = net.input_weights.copy()
    b1 = net.input_bias.copy()
    w2 = net.output_weights.copy()
    b2 = np.array([net.output_bias])
    rng = np.random.default_rng(cfg.seed + 1)
    trace = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(X.shape[0]).astype(np.int64)
        kernels.narx_sgd_epoch(X, y, order, W1, b1, w2, b2, float(cfg.learning_rate), int(cfg.batch_size))
        current = NarxNetwork(W1.copy(), b1.copy(), w2.copy(), float(b2[0]), cfg)
        loss = narx_loss(current, X, y)
        if not np.isfinite(loss):
            raise DivergedError(epoch)
        trace.append(loss)
        log.debug("narx epoch %d loss %.6g", epoch, loss)
    return NarxNetwork(W1, b1, w2, float(b2[0]), cfg, tuple(trace))


def predict_series_parallel(net: NarxNetwork, data: Dataset, columns=None) -> tuple:
    """One-step open-loop predictions over a dataset.

    Returns ``(predictions, target_index)`` where ``target_index`` are the row
    positions the predictions refer to (the first ``max_lag`` rows have none).
    """
    cfg = net.config
    U = data.features if columns is None else np.column_stack([data.column(c) for c in columns])
    if len(data) <= cfg.max_lag:
        raise ValueError("insufficient history")
    y = data.pv_power
    if cfg.d_y and y is None:
        raise ValueError("output lags need pv_power in the data")
    R, tidx = regressor_matrix(U, y, cfg.d_u, cfg.d_y)
    return narx_predict(net, R), tidx


def forecast_parallel(net: NarxNetwork, history: Dataset, future_u, columns=None) -> np.ndarray:
    """Closed-loop forecast of the steps following ``history``.

    Output ``j`` is the prediction for the time step after ``future_u[j-1]``
    (output 0 follows the last history row), so the regressor of output ``j``
    uses inputs up to ``future_u[j-1]`` and, for its output lags, actual
    history values followed by earlier predictions. Predictions leaving
    ``[-10, 10]`` (scaled units) are clamped with a warning.
    """
    cfg = net.config
    future_u = np.asarray(future_u, dtype=np.float64)
    H = future_u.shape[0]
    U = history.features if columns is None else np.column_stack([history.column(c) for c in columns])
    F = U.shape[1]
    if H and (future_u.ndim != 2 or future_u.shape[1] != F):
        raise ValueError(f"future inputs must have {F} columns")
    if len(history) < cfg.max_lag:
        raise ValueError("insufficient seed history")
    if F != net.n_features or cfg.regressor_length(F) != net.regressor_length:
        raise ValueError("history columns do not match the network")
    if H == 0:
        return np.zeros(0)
    if cfg.d_y:
        if history.pv_power is None:
            raise ValueError("output lags need pv_power in the history")
        y_seed = np.ascontiguousarray(history.pv_power[len(history) - cfg.d_y:])
    else:
        y_seed = np.zeros(0)
    u_all = np.ascontiguousarray(np.vstack([U[len(U) - cfg.d_u:], future_u]))
    out, n_clamped = kernels.narx_closed_loop(
        net.input_weights, net.input_bias, net.output_weights, net.output_bias,
        u_all, y_seed, cfg.d_u, cfg.d_y, H, CLOSED_LOOP_BOUND,
    )
    if n_clamped:
        warnings.warn(f"closed-loop prediction clamped at {n_clamped} step(s)", ClosedLoopClampWarning)
    return out


def to_dict(net: NarxNetwork):
    from .serialize import encode_array

    return {
        "config": net.config.__dict__.copy(),
        "input_weights": encode_array(net.input_weights),
        "input_bias": encode_array(net.input_bias),
        "output_weights": encode_array(net.output_weights),
        "output_bias": net.output_bias,
        "loss_trace": list(net.loss_trace),
    }


def from_dict(d) -> NarxNetwork:
    from .serialize import decode_array

    return NarxNetwork(
        decode_array(d["input_weights"]),
        decode_array(d["input_bias"]),
        decode_array(d["output_weights"]),
        float(d["output_bias"]),
        NarxConfig(**d["config"]),
        tuple(d.get("loss_trace", ())),
    )
