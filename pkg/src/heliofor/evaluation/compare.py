"""Side-by-side comparison of the four forecasters under equal tuning budgets.

Every model is tuned with the same number of randomized-search draws. A
draw is scored by validation RMSE: the model is fit on the early part of a
tuning window cut from the end of the training partition and scored on the
rest of that window. The winning configuration is then refit on the whole
training partition and scored on the test partition.
"""

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..core import Dataset, split_chronological
from ..hybrid import PipelineConfig
from .forecasters import make_extratrees, make_hybrid, make_knn, make_lstm
from .metrics import Metrics, evaluate, improvement
from .search import Choice, IntRange, SearchSpace, Uniform, randomized_search

log = logging.getLogger(__name__)

MODEL_ORDER = ("Extra Trees", "KNN", "LSTM RNN", "NARX-LSTM")


def _recurrent_space():
    return {
        "learning_rate": Uniform(0.02, 0.2, log=True),
        "batch_size": Choice((1, 2, 4, 8)),
        "hidden_size": Choice((8, 12, 16)),
    }


def default_spaces():
    """Search spaces per model. Both recurrent models share one space."""
    return {
        "Extra Trees": {"min_samples_leaf": IntRange(1, 20), "max_features": Choice((None, 2, 3))},
        "KNN": {"k": IntRange(1, 50, log=True)},
        "LSTM RNN": _recurrent_space(),
        "NARX-LSTM": _recurrent_space(),
    }


@dataclass(frozen=True)
class CompareConfig:
    """Settings shared by every model in a comparison.

    ``tune_rows`` is the length of the tuning window taken from the end of
    the training partition; its last ``tune_val_fraction`` is the validation
    part. ``pipeline`` supplies the fixed (untuned) settings of the two
    recurrent models, so both get the same epochs and sequence length.
    """

    pipeline: PipelineConfig = PipelineConfig()
    budget: int = 20
    seed: int = 0
    tune_rows: int = 4032
    tune_val_fraction: float = 0.25
    tune_epochs: int = 15
    n_trees: int = 30

    def __post_init__(self):
        if self.budget < 1:
            raise ValueError("budget must be >= 1")
        if not 0 < self.tune_val_fraction < 1:
            raise ValueError("tune_val_fraction must lie in (0, 1)")


@dataclass(frozen=True)
class ComparisonRow:
    model: str
    metrics: Metrics = None
    best_config: dict = field(default_factory=dict)
    search_trace: tuple = ()
    predicted: np.ndarray = None
    error: str = None

    @property
    def failed(self):
        return self.error is not None


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple
    best: str
    runner_up: str
    improvement_pct: float
    test_timestamps: np.ndarray
    test_actual: np.ndarray

    def row(self, name):
        for r in self.rows:
            if r.model == name:
                return r
        raise KeyError(name)


def _factories(cfg: CompareConfig):
    pipe = cfg.pipeline
    seeded_pipe = replace(pipe, lstm=replace(pipe.lstm, seed=cfg.seed), narx=replace(pipe.narx, seed=cfg.seed))
    return {
        "Extra Trees": lambda p: make_extratrees({"n_trees": cfg.n_trees, "seed": cfg.seed, **p}),
        "KNN": make_knn,
        "LSTM RNN": lambda p: make_lstm(p, seeded_pipe.lstm, pipe.lstm_warmup),
        "NARX-LSTM": lambda p: make_hybrid(p, seeded_pipe),
    }


def _scored(actual, pred):
    ok = ~np.isnan(pred)
    return evaluate(actual[ok], pred[ok])


def compare_models(data: Dataset, cfg: CompareConfig = CompareConfig(), spaces=None, factories=None) -> ComparisonTable:
    """Tune, fit and score every model on one chronological split.

    ``factories`` maps a model name to ``params -> forecaster``; it defaults
    to the four standard models. A model whose tuning or final fit raises is
    kept as a failed row and the others proceed.
    """
    spaces = spaces if spaces is not None else default_spaces()
    factories = factories if factories is not None else _factories(cfg)
    train, test = split_chronological(data, cfg.pipeline.train_fraction)
    if len(test) == 0:
        raise ValueError("insufficient data for a test partition")
    tune = train[max(0, len(train) - cfg.tune_rows):]
    cut = len(tune) - max(1, int(round(cfg.tune_val_fraction * len(tune))))
    tune_fit, tune_val = tune[:cut], tune[cut:]

    rows = []
    for name, make in factories.items():
        space = SearchSpace(spaces.get(name, {}), cfg.budget, cfg.seed)
        recurrent = name in ("LSTM RNN", "NARX-LSTM")

        def objective(params, make=make, recurrent=recurrent):
            if recurrent:
                params = {**params, "epochs": cfg.tune_epochs}
            model = make(params).fit([tune_fit])
            return _scored(tune_val.pv_power, model.predict(tune_val, tune_fit)).rmse

        try:
            best, trace = randomized_search(space, objective)
            model = make(best).fit([train])
            pred = np.asarray(model.predict(test, train), dtype=np.float64)
            metrics = _scored(test.pv_power, pred)
            rows.append(ComparisonRow(name, metrics, best, trace, pred))
            log.info("%s: rmse=%.4f mae=%.4f", name, metrics.rmse, metrics.mae)
        except Exception as exc:  # noqa: BLE001 - a failing model becomes a failed row
            log.warning("%s failed: %s", name, exc)
            rows.append(ComparisonRow(name, error=f"{type(exc).__name__}: {exc}"))

    ranked = sorted((r for r in rows if not r.failed and math.isfinite(r.metrics.rmse)),
                    key=lambda r: r.metrics.rmse)
    best_name = ranked[0].model if ranked else None
    runner = ranked[1].model if len(ranked) > 1 else None
    gain = improvement(ranked[0].metrics.rmse, ranked[1].metrics.rmse) if runner and ranked[1].metrics.rmse > 0 else float("nan")
    return ComparisonTable(tuple(rows), best_name, runner, gain, test.timestamps, test.pv_power)
