"""Two-stage NARX-LSTM forecaster.

Stage one: a NARX network trained open loop on the scaled weather inputs and
lagged power produces a first power estimate for every step. Stage two: that
estimate is appended to the weather features as column ``narx_power`` and a
stacked LSTM maps the augmented sequence to the final power.

Alignment: the NARX estimate for step ``t`` uses inputs up to ``t-1`` (and
power up to ``t-1``); the LSTM at step ``t`` sees the weather at ``t`` plus
that estimate and predicts the power at ``t``.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from . import lstm as lstm_mod
from . import narx as narx_mod
from .core import (
    FEATURES,
    NARX_COLUMN,
    TARGET,
    Dataset,
    DataError,
    MinMaxScaler,
    concat,
    make_windows,
    split_chronological,
    transform,
)
from .evaluation.metrics import Metrics, evaluate
from .lstm import LstmConfig, LstmStack
from .narx import NarxConfig, NarxNetwork

log = logging.getLogger(__name__)

PIPELINE_STEPS = (
    "split",
    "fit_scaler",
    "train_narx",
    "predict_narx",
    "augment",
    "train_lstm",
    "evaluate",
)


@dataclass(frozen=True)
class PipelineConfig:
    narx: NarxConfig = NarxConfig()
    lstm: LstmConfig = LstmConfig()
    train_fraction: float = 0.8
    lstm_warmup: int = 16

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.lstm_warmup < 0:
            raise ValueError("lstm_warmup must be >= 0")


@dataclass(frozen=True, eq=False)
class HybridModel:
    narx: NarxNetwork
    lstm: LstmStack
    scaler: MinMaxScaler
    feature_names: tuple = FEATURES + (NARX_COLUMN,)
    seq_len: int = 64
    lstm_warmup: int = 16

    def __post_init__(self):
        if self.lstm.input_size != len(self.feature_names):
            raise ValueError("LSTM input size must equal the augmented feature count")
        for col in self.feature_names + (TARGET,):
            if col not in self.scaler.columns:
                raise ValueError(f"scaler lacks column {col!r}")

    @property
    def base_features(self):
        return self.feature_names[:-1]

    @property
    def max_lag(self):
        return self.narx.config.max_lag

    def equals(self, other):
        return (
            self.narx.equals(other.narx)
            and self.lstm.equals(other.lstm)
            and self.scaler == other.scaler
            and self.feature_names == other.feature_names
            and self.seq_len == other.seq_len
            and self.lstm_warmup == other.lstm_warmup
        )


@dataclass(frozen=True, eq=False)
class EvalReport:
    metrics: Metrics
    trace: tuple
    n_train: int
    n_test: int
    timestamps: np.ndarray
    actual: np.ndarray
    predicted: np.ndarray
    narx_loss: tuple = ()
    lstm_loss: tuple = ()

    def same_as(self, other):
        return (
            self.metrics == other.metrics
            and self.trace == other.trace
            and np.array_equal(self.predicted, other.predicted)
            and np.array_equal(self.actual, other.actual)
        )


def _base(data: Dataset):
    missing = [c for c in FEATURES if c not in data.columns]
    if missing:
        raise DataError(f"dataset lacks columns {missing}")
    if data.columns == FEATURES:
        return data
    return Dataset(data.timestamps, np.column_stack([data.column(c) for c in FEATURES]),
                   data.pv_power, data.step_seconds, FEATURES)


def narx_one_step(net: NarxNetwork, scaled: Dataset):
    """Open-loop NARX estimates (scaled units) and the rows they refer to."""
    return narx_mod.predict_series_parallel(net, scaled, FEATURES)


def export_augmented(dataset: Dataset, narx, scaler: Optional[MinMaxScaler] = None):
    """Append the NARX power estimate as column ``narx_power`` (watts).

    ``narx`` is a :class:`NarxNetwork` (applied to ``dataset`` scaled with
    ``scaler``, or unscaled if ``scaler`` is None) or any callable mapping a
    dataset to ``(estimates, target_index)``. Rows without enough lag history
    are dropped. Returns ``(augmented, n_dropped)``.
    """
    base = _base(dataset)
    source = transform(scaler, base) if scaler is not None else base
    if isinstance(narx, NarxNetwork):
        est, tidx = narx_one_step(narx, source)
    else:
        est, tidx = narx(source)
    if scaler is not None:
        est = scaler.unscale_values(est, TARGET)
    first = int(tidx[0]) if len(tidx) else len(dataset)
    kept = dataset[first:]
    return kept.with_column(NARX_COLUMN, est), first


def _stage_inputs(model_scaler, augmented: Dataset):
    """Scaled LSTM inputs (weather + NARX column) and scaled targets."""
    X = np.column_stack([model_scaler.scale_values(augmented.column(c), c)
                         for c in FEATURES + (NARX_COLUMN,)])
    y = None if augmented.pv_power is None else model_scaler.scale_values(augmented.pv_power, TARGET)
    return X, y


def fit_hybrid(parts, cfg: PipelineConfig, trace=None) -> HybridModel:
    """Fit both stages on one or more contiguous training pieces."""
    trace = trace if trace is not None else []
    parts = [_base(p) for p in parts]
    for p in parts:
        if not p.has_target:
            raise DataError("training data needs pv_power")
    L = cfg.narx.max_lag
    usable = [p for p in parts if len(p) > L]
    if not usable:
        raise DataError("insufficient data: no training piece is longer than the NARX lag")

    stacked = np.vstack([np.column_stack([p.features, p.pv_power]) for p in usable])
    scaler = MinMaxScaler.from_array(stacked, FEATURES + (TARGET,))
    trace.append("fit_scaler")

    scaled = [transform(scaler, p) for p in usable]
    windows = [make_windows(s, cfg.narx.d_u, cfg.narx.d_y) for s in scaled]
    inputs = np.vstack([w.inputs for w in windows])
    targets = np.concatenate([w.targets for w in windows])
    all_windows = replace(windows[0], inputs=inputs, targets=targets, target_index=None)
    net = narx_mod.train_series_parallel(all_windows, cfg.narx)
    trace.append("train_narx")

    estimates = [scaler.unscale_values(narx_one_step(net, s)[0], TARGET) for s in scaled]
    trace.append("predict_narx")

    scaler = scaler.extended(NARX_COLUMN, np.concatenate(estimates))
    augmented = [p[L:].with_column(NARX_COLUMN, e) for p, e in zip(usable, estimates)]
    segments = [_stage_inputs(scaler, a) for a in augmented]
    trace.append("augment")

    stack = lstm_mod.train_lstm(segments, cfg.lstm, input_size=len(FEATURES) + 1)
    trace.append("train_lstm")
    return HybridModel(net, stack, scaler, FEATURES + (NARX_COLUMN,), cfg.lstm.seq_len, cfg.lstm_warmup)


def predict_one_step(model: HybridModel, block: Dataset, history: Optional[Dataset] = None) -> np.ndarray:
    """Watts for every row of ``block`` using measured lags (open-loop NARX).

    Lags for the first rows come from the tail of ``history``, which also
    warms the LSTM up over its last ``lstm_warmup`` rows when long enough.
    Without history the first ``max_lag`` rows cannot be predicted and are
    NaN.
    """
    block = _base(block)
    if not block.has_target and model.narx.config.d_y:
        raise DataError("open-loop prediction needs measured pv_power")
    L = model.max_lag
    lead = 0
    if history is not None and L > 0 and len(history) >= L:
        lead = min(len(history), L + model.lstm_warmup)
    ctx = concat([_base(history)[len(history) - lead:], block]) if lead else block
    out = np.full(len(block), np.nan)
    if len(ctx) <= L:
        return out
    est, tidx = narx_one_step(model.narx, transform(model.scaler, ctx))
    first = int(tidx[0])
    augmented = ctx[first:].with_column(NARX_COLUMN, model.scaler.unscale_values(est, TARGET))
    X, _ = _stage_inputs(model.scaler, augmented)
    pred = np.maximum(model.scaler.unscale_values(lstm_mod.predict_series(model.lstm, X, model.seq_len), TARGET), 0.0)
    keep = min(len(block), len(pred))
    out[len(block) - keep:] = pred[len(pred) - keep:]
    return out


def predict_hybrid(model: HybridModel, history: Dataset, future_u) -> np.ndarray:
    """Multi-step forecast in watts for the steps after ``history``.

    ``future_u`` holds the weather for each forecast step (rows in base
    feature order). The NARX stage runs closed loop from the history's
    measured power; the LSTM is warmed up on the last ``lstm_warmup`` history
    steps (with open-loop NARX estimates) and then fed the forecast steps.
    Output is clamped at 0 W.
    """
    future_u = np.asarray(future_u, dtype=np.float64)
    if future_u.size == 0:
        return np.zeros(0)
    if future_u.ndim != 2 or future_u.shape[1] != len(FEATURES):
        raise ValueError(f"future inputs must have {len(FEATURES)} columns")
    history = _base(history)
    L, W = model.max_lag, model.lstm_warmup
    if len(history) < L + W or len(history) <= L:
        raise DataError(f"insufficient history: need {max(L + W, L + 1)} rows, got {len(history)}")
    if not history.has_target:
        raise DataError("history needs measured pv_power")
    scaled_hist = transform(model.scaler, history)
    scaled_future = np.column_stack([model.scaler.scale_values(future_u[:, j], c) for j, c in enumerate(FEATURES)])
    closed = narx_mod.forecast_parallel(model.narx, scaled_hist, scaled_future, FEATURES)
    fut_narx = model.scaler.scale_values(model.scaler.unscale_values(closed, TARGET), NARX_COLUMN)
    X_future = np.column_stack([scaled_future, fut_narx])
    if W:
        warm = history[len(history) - W - L:]
        warm_est, _ = narx_one_step(model.narx, transform(model.scaler, warm))
        warm_aug = warm[L:].with_column(NARX_COLUMN, model.scaler.unscale_values(warm_est, TARGET))
        X_warm, _ = _stage_inputs(model.scaler, warm_aug)
        X = np.vstack([X_warm, X_future])
    else:
        X = X_future
    pred = lstm_mod.predict_series(model.lstm, X, model.seq_len)[W:]
    return np.maximum(model.scaler.unscale_values(pred, TARGET), 0.0)


def train_hybrid(data: Dataset, cfg: PipelineConfig = PipelineConfig()):
    """Split, fit both stages on the training part, score the held-out part."""
    trace = []
    data = _base(data)
    if not data.has_target:
        raise DataError("training data needs pv_power")
    train, test = split_chronological(data, cfg.train_fraction)
    if len(test) == 0:
        raise DataError("insufficient data for a test partition")
    trace.append("split")
    model = fit_hybrid([train], cfg, trace)
    pred = predict_one_step(model, test, history=train)
    ok = ~np.isnan(pred)
    metrics = evaluate(test.pv_power[ok], pred[ok])
    trace.append("evaluate")
    log.info("hybrid test rmse=%.4f mae=%.4f", metrics.rmse, metrics.mae)
    report = EvalReport(metrics, tuple(trace), len(train), len(test), test.timestamps[ok],
                        test.pv_power[ok], pred[ok], model.narx.loss_trace, model.lstm.loss_trace)
    return model, report


def to_dict(model: HybridModel):
    return {
        "narx": narx_mod.to_dict(model.narx),
        "lstm": lstm_mod.to_dict(model.lstm),
        "scaler": model.scaler.to_dict(),
        "feature_names": list(model.feature_names),
        "seq_len": model.seq_len,
        "lstm_warmup": model.lstm_warmup,
    }


def from_dict(d) -> HybridModel:
    return HybridModel(
        narx_mod.from_dict(d["narx"]),
        lstm_mod.from_dict(d["lstm"]),
        MinMaxScaler.from_dict(d["scaler"]),
        tuple(d["feature_names"]),
        int(d["seq_len"]),
        int(d["lstm_warmup"]),
    )
