"""``heliofor`` command-line interface.

Subcommands: ``synth``, ``train``, ``forecast``, ``evaluate``, ``compare`` and
``importance``. On failure a single JSON line ``{"error": ..., "message":
...}`` goes to stderr, the exit status is nonzero and any files the command
had already written are removed.
"""

import argparse
import json
import logging
import os
import sys
from dataclasses import replace

import numpy as np

from . import hybrid
from .config import ConfigError, RunConfig, load_config
from .core import FEATURES, Dataset, DataError
from .csvio import parse_csv, write_csv, write_table
from .evaluation.compare import compare_models
from .evaluation.cv import kfold_cv
from .evaluation.forecasters import HybridForecaster
from .evaluation.metrics import evaluate
from .linear import fit_elastic_net, rank_features
from .report import Report, add_metrics, metadata
from .serialize import load_model, save_model
from .synth import generate

log = logging.getLogger("heliofor")


class UsageError(Exception):
    pass


class Outputs:
    """Tracks files written by a command so a failure can remove them."""

    def __init__(self, directory):
        self.directory = directory
        self.written = []

    def path(self, name):
        p = os.path.join(self.directory, name)
        self.written.append(p)
        return p

    def rollback(self):
        for p in self.written:
            try:
                os.remove(p)
            except FileNotFoundError:
                pass


def _setup_logging():
    level = os.environ.get("HELIOFOR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")


def _require(value, flag):
    if value is None:
        raise UsageError(f"missing required input {flag}")
    return value


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_synth(args, cfg: RunConfig, out: Outputs):
    plant = cfg.plant if args.seed is None else replace(cfg.plant, noise_seed=args.seed)
    data = generate(plant, cfg.synth)
    write_csv(data, out.path("synth.csv"))
    log.info("wrote %d synthetic rows", len(data))


def cmd_train(args, cfg: RunConfig, out: Outputs):
    data = parse_csv(_require(args.data or cfg.paths.data, "--data"))
    model, rep = hybrid.train_hybrid(data, cfg.pipeline_config())
    save_model(model, out.path("model.json"))
    r = metadata(Report(), "train", cfg, data)
    r.put("train_rows", rep.n_train).put("test_rows", rep.n_test)
    r.put("trace", " > ".join(rep.trace))
    add_metrics(r, rep.metrics)
    r.table("loss.narx", ["epoch", "mse"], list(enumerate(rep.narx_loss)))
    r.table("loss.lstm", ["epoch", "mse"], list(enumerate(rep.lstm_loss)))
    r.write(out.path("train_report.txt"))


def _forecast_inputs(data: Dataset, future, horizon):
    if future is not None:
        fut = future[:horizon] if horizon is not None else future
        return data, fut
    if horizon is None:
        raise UsageError("forecast needs --future or --horizon")
    if horizon >= len(data):
        raise DataError("insufficient history: horizon leaves no history rows")
    return data[: len(data) - horizon], data[len(data) - horizon:]


def run_forecast(model, history: Dataset, future: Dataset):
    """Predictions for ``future``'s rows plus the matching actuals (or None)."""
    if len(future) == 0:
        return np.zeros(0), (np.zeros(0) if future.has_target else None)
    u = np.column_stack([future.column(c) for c in FEATURES])
    pred = hybrid.predict_hybrid(model, history, u)
    return pred, (future.pv_power if future.has_target else None)


def cmd_forecast(args, cfg: RunConfig, out: Outputs):
    model = load_model(_require(args.model or cfg.paths.model, "--model"), "hybrid")
    data = parse_csv(_require(args.data or cfg.paths.data, "--data"))
    future = parse_csv(args.future) if args.future else None
    horizon = args.horizon if args.horizon is not None else (None if future is not None else cfg.forecast.horizon)
    history, fut = _forecast_inputs(data, future, horizon)
    pred, actual = run_forecast(model, history, fut)
    if actual is not None:
        rows = [(int(t), a, p) for t, a, p in zip(fut.timestamps, actual, pred)]
        write_table(out.path("forecast.csv"), ["timestamp", "actual", "predicted"], rows)
    else:
        write_table(out.path("forecast.csv"), ["timestamp", "predicted"],
                    [(int(t), p) for t, p in zip(fut.timestamps, pred)])
    if len(fut) and actual is not None:
        from .plotting import forecast_plot

        forecast_plot(out.path("forecast.svg"), fut.timestamps, pred, actual,
                      title=f"{len(fut)}-step forecast")


def cmd_evaluate(args, cfg: RunConfig, out: Outputs):
    model = load_model(_require(args.model or cfg.paths.model, "--model"), "hybrid")
    data = parse_csv(_require(args.data or cfg.paths.data, "--data"))
    if not data.has_target:
        raise DataError("evaluation data needs pv_power")
    pred = hybrid.predict_one_step(model, data)
    ok = ~np.isnan(pred)
    r = metadata(Report(), "evaluate", cfg, data)
    r.put("unscored_rows", int((~ok).sum()))
    add_metrics(r, evaluate(data.pv_power[ok], pred[ok]))
    k = args.k if args.k is not None else cfg.evaluate.cv_folds
    if k:
        cv = kfold_cv(data, k, HybridForecaster(cfg.pipeline_config()))
        rows = [(i, a, b, m.rmse, m.mae, m.mape) for i, ((a, b), m) in enumerate(zip(cv.blocks, cv.per_fold))]
        rows.append(("mean", "", "", cv.aggregate.rmse, cv.aggregate.mae, cv.aggregate.mape))
        r.table("cv", ["fold", "start", "stop", "rmse", "mae", "mape"], rows)
    r.table("predictions", ["timestamp", "actual", "predicted"],
            [(int(t), a, p) for t, a, p in zip(data.timestamps[ok], data.pv_power[ok], pred[ok])])
    r.write(out.path("report.txt"))


def cmd_compare(args, cfg: RunConfig, out: Outputs):
    data = parse_csv(_require(args.data or cfg.paths.data, "--data"))
    ccfg = cfg.compare_config()
    if args.budget is not None:
        ccfg = replace(ccfg, budget=args.budget)
    table = compare_models(data, ccfg)
    r = metadata(Report(), "compare", cfg, data)
    r.put("budget", ccfg.budget)
    rows = []
    for row in table.rows:
        if row.failed:
            rows.append((row.model, None, None, None, "failed: " + row.error.replace(",", ";")))
        else:
            rows.append((row.model, row.metrics.rmse, row.metrics.mae, row.metrics.mape, "ok"))
    r.table("comparison", ["model", "rmse", "mae", "mape", "status"], rows)
    r.section("comparison.summary")
    r.put("best", table.best).put("runner_up", table.runner_up).put("improvement_pct", table.improvement_pct)
    for row in table.rows:
        if not row.failed:
            r.section(f"best_config.{row.model}")
            for key in sorted(row.best_config):
                r.put(key, row.best_config[key])
    r.write(out.path("compare.txt"))
    from .plotting import overlay_plot

    series = [(row.model, row.predicted) for row in table.rows if not row.failed]
    overlay_plot(out.path("compare.svg"), table.test_timestamps, table.test_actual, series)


def cmd_importance(args, cfg: RunConfig, out: Outputs):
    data = parse_csv(_require(args.data or cfg.paths.data, "--data"))
    if not data.has_target:
        raise DataError("importance needs pv_power")
    X = np.column_stack([data.column(c) for c in FEATURES])
    model = fit_elastic_net(X, data.pv_power, cfg.importance.lam, cfg.importance.l1_ratio)
    ranking = rank_features(model, FEATURES)
    coef = dict(zip(FEATURES, model.coefficients))
    r = metadata(Report(), "importance", cfg, data)
    r.put("lam", cfg.importance.lam).put("l1_ratio", cfg.importance.l1_ratio).put("no_signal", ranking.no_signal)
    r.table("ranking", ["rank", "feature", "importance", "coefficient"],
            [(i + 1, n, v, coef[n]) for i, (n, v) in enumerate(ranking)])
    r.write(out.path("importance.txt"))
    from .plotting import importance_plot

    importance_plot(out.path("importance.svg"), list(ranking))


COMMANDS = {
    "synth": cmd_synth,
    "train": cmd_train,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "importance": cmd_importance,
}


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="global seed (for synth: the generator seed)")
    common.add_argument("--out", help="output directory (default from config, else ./out)")

    p = argparse.ArgumentParser(prog="heliofor", description="Hybrid NARX-LSTM PV power forecasting.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("synth", parents=[common], help="write a synthetic plant dataset")
    t = sub.add_parser("train", parents=[common], help="train the hybrid model")
    t.add_argument("--data")
    t.add_argument("--epochs", type=int, help="epochs for both the NARX and the LSTM stage")
    f = sub.add_parser("forecast", parents=[common], help="multi-step forecast from a trained model")
    f.add_argument("--model")
    f.add_argument("--data", help="history CSV (its last HORIZON rows are forecast when --future is absent)")
    f.add_argument("--future", help="CSV with the weather of the steps to forecast")
    f.add_argument("--horizon", type=int)
    e = sub.add_parser("evaluate", parents=[common], help="score a trained model")
    e.add_argument("--model")
    e.add_argument("--data")
    e.add_argument("--k", type=int, help="cross-validation folds (0 disables)")
    c = sub.add_parser("compare", parents=[common], help="tune and compare the four models")
    c.add_argument("--data")
    c.add_argument("--budget", type=int, help="randomized-search draws per model")
    i = sub.add_parser("importance", parents=[common], help="elastic net feature ranking")
    i.add_argument("--data")
    return p


def _apply_overrides(args, cfg: RunConfig) -> RunConfig:
    if args.seed is not None and args.command != "synth":
        cfg = replace(cfg, seed=args.seed)
    if getattr(args, "epochs", None) is not None:
        cfg = replace(cfg, narx=replace(cfg.narx, epochs=args.epochs), lstm=replace(cfg.lstm, epochs=args.epochs))
    if getattr(args, "horizon", None) is not None and args.horizon < 0:
        raise UsageError("--horizon must be >= 0")
    if getattr(args, "k", None) is not None and args.k < 0:
        raise UsageError("--k must be >= 0")
    if getattr(args, "budget", None) is not None and args.budget < 1:
        raise UsageError("--budget must be >= 1")
    return cfg


def main(argv=None):
    _setup_logging()
    args = build_parser().parse_args(argv)
    out = None
    try:
        cfg = _apply_overrides(args, load_config(args.config))
        out = Outputs(args.out or cfg.paths.out)
        os.makedirs(out.directory, exist_ok=True)
        COMMANDS[args.command](args, cfg, out)
    except Exception as exc:  # noqa: BLE001 - every failure becomes one JSON line
        if out is not None:
            out.rollback()
        log.debug("command failed", exc_info=True)
        kind = {UsageError: "usage", ConfigError: "config"}.get(type(exc))
        if kind is None:
            kind = "data" if isinstance(exc, DataError) else type(exc).__name__
        msg = str(exc) if not isinstance(exc, KeyError) else str(exc.args[0])
        print(json.dumps({"error": kind, "command": args.command, "message": msg}), file=sys.stderr)
        return 2 if kind == "usage" else 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
