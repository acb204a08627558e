"""Uniform fit/predict wrappers used by cross-validation and model comparison.

Every forecaster predicts the PV power (watts) of each row of a block from
that row's weather (and, for the hybrid, lags taken from preceding rows).
``fit`` takes a list of contiguous training pieces; ``predict(block,
history)`` returns one value per row of ``block``.
"""

from dataclasses import replace

import numpy as np

from .. import lstm as lstm_mod
from ..core import FEATURES, TARGET, MinMaxScaler
from ..hybrid import PipelineConfig, _base, fit_hybrid, predict_one_step
from ..lstm import LstmConfig
from .knn import knn_fit, knn_predict
from .trees import extratrees_fit, extratrees_predict


def _fit_scaler(parts):
    stacked = np.vstack([np.column_stack([_base(p).features, p.pv_power]) for p in parts])
    return MinMaxScaler.from_array(stacked, FEATURES + (TARGET,))


def _scaled_inputs(scaler, data):
    data = _base(data)
    return np.column_stack([scaler.scale_values(data.column(c), c) for c in FEATURES])


class Forecaster:
    name = "base"

    def fit(self, parts):
        raise NotImplementedError

    def predict(self, block, history=None):
        raise NotImplementedError

    def __call__(self, parts):
        """Trainer protocol for :func:`heliofor.evaluation.cv.kfold_cv`."""
        self.fit(parts)
        return self.predict


class MeanForecaster(Forecaster):
    name = "mean"

    def fit(self, parts):
        y = np.concatenate([p.pv_power for p in parts])
        self.mean_ = float(y.mean())
        return self

    def predict(self, block, history=None):
        return np.full(len(block), self.mean_)


class KnnForecaster(Forecaster):
    name = "KNN"

    def __init__(self, k=10, max_train_rows=None):
        self.k = int(k)
        self.max_train_rows = max_train_rows

    def fit(self, parts):
        self.scaler_ = _fit_scaler(parts)
        X = np.vstack([_scaled_inputs(self.scaler_, p) for p in parts])
        y = np.concatenate([p.pv_power for p in parts])
        if self.max_train_rows and X.shape[0] > self.max_train_rows:
            stride = int(np.ceil(X.shape[0] / self.max_train_rows))
            X, y = X[::stride], y[::stride]
        self.model_ = knn_fit(X, y, min(self.k, X.shape[0]))
        return self

    def predict(self, block, history=None):
        return knn_predict(self.model_, _scaled_inputs(self.scaler_, block))


class ExtraTreesForecaster(Forecaster):
    name = "Extra Trees"

    def __init__(self, n_trees=50, min_samples_leaf=5, max_features=None, seed=0):
        self.n_trees = int(n_trees)
        self.min_samples_leaf = int(min_samples_leaf)
        self.max_features = max_features
        self.seed = seed

    def fit(self, parts):
        X = np.vstack([_base(p).features for p in parts])
        y = np.concatenate([p.pv_power for p in parts])
        self.model_ = extratrees_fit(X, y, self.n_trees, self.min_samples_leaf, self.max_features, self.seed)
        return self

    def predict(self, block, history=None):
        return extratrees_predict(self.model_, _base(block).features)


class LstmForecaster(Forecaster):
    """Stacked LSTM over the weather features alone.

    Like the hybrid, prediction warms the network up on the last ``warmup``
    rows of ``history`` when it is given.
    """

    name = "LSTM RNN"

    def __init__(self, cfg: LstmConfig = LstmConfig(), warmup=16):
        self.cfg = cfg
        self.warmup = int(warmup)

    def fit(self, parts):
        self.scaler_ = _fit_scaler(parts)
        segments = [(_scaled_inputs(self.scaler_, p), self.scaler_.scale_values(p.pv_power, TARGET)) for p in parts]
        self.stack_ = lstm_mod.train_lstm(segments, self.cfg, input_size=len(FEATURES))
        return self

    def predict(self, block, history=None):
        X = _scaled_inputs(self.scaler_, block)
        lead = 0 if history is None else min(self.warmup, len(history))
        if lead:
            X = np.vstack([_scaled_inputs(self.scaler_, history[len(history) - lead:]), X])
        pred = lstm_mod.predict_series(self.stack_, X, self.cfg.seq_len)[lead:]
        return np.maximum(self.scaler_.unscale_values(pred, TARGET), 0.0)


class HybridForecaster(Forecaster):
    name = "NARX-LSTM"

    def __init__(self, cfg: PipelineConfig = PipelineConfig()):
        self.cfg = cfg

    def fit(self, parts):
        self.model_ = fit_hybrid(parts, self.cfg)
        return self

    def predict(self, block, history=None):
        return predict_one_step(self.model_, block, history)


# ---------------------------------------------------------------------------
# factories from flat hyperparameter dicts (as drawn by randomized search)
# ---------------------------------------------------------------------------


def _lstm_cfg(base: LstmConfig, params, prefix=""):
    keys = ("hidden_size", "learning_rate", "batch_size", "seq_len", "momentum", "epochs")
    upd = {k: params[prefix + k] for k in keys if prefix + k in params}
    return replace(base, **upd)


def make_knn(params, base=None):
    return KnnForecaster(params.get("k", 10), params.get("max_train_rows"))


def make_extratrees(params, base=None):
    return ExtraTreesForecaster(params.get("n_trees", 50), params.get("min_samples_leaf", 5),
                                params.get("max_features"), params.get("seed", 0))


def make_lstm(params, base: LstmConfig = LstmConfig(), warmup=16):
    return LstmForecaster(_lstm_cfg(base, params), warmup)


def make_hybrid(params, base: PipelineConfig = PipelineConfig()):
    narx_upd = {k[5:]: v for k, v in params.items() if k.startswith("narx_")}
    narx_cfg = replace(base.narx, **narx_upd) if narx_upd else base.narx
    return HybridForecaster(replace(base, narx=narx_cfg, lstm=_lstm_cfg(base.lstm, params)))
