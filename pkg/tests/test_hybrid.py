import numpy as np
import pytest

from heliofor import lstm as lstm_mod
from heliofor.core import FEATURES, NARX_COLUMN, TARGET, Dataset, DataError, split_chronological
from heliofor.csvio import parse_csv, write_csv
from heliofor.hybrid import (
    PIPELINE_STEPS,
    HybridModel,
    PipelineConfig,
    export_augmented,
    predict_hybrid,
    predict_one_step,
    train_hybrid,
)
from heliofor.lstm import LstmConfig
from heliofor.narx import NarxConfig
from heliofor.serialize import load_model, save_model
from heliofor.synth import PlantSpec, SynthConfig, generate

FAST = PipelineConfig(narx=NarxConfig(epochs=5, seed=3), lstm=LstmConfig(hidden_size=6, epochs=3, seq_len=32, seed=4))


@pytest.fixture(scope="module")
def fast_fit(small_year):
    return train_hybrid(small_year, FAST)


@pytest.fixture(scope="module")
def month_model():
    data = generate(PlantSpec(noise_seed=11), SynthConfig(days=30))
    model, _ = train_hybrid(data, PipelineConfig())
    return data, model


def weather(block):
    return np.column_stack([block.column(c) for c in FEATURES])


def test_trace_follows_pipeline_order(fast_fit):
    _, rep = fast_fit
    assert rep.trace == PIPELINE_STEPS
    assert np.isfinite(rep.metrics.rmse) and np.isfinite(rep.metrics.mae)


def test_augmented_width_and_row_count(fast_fit, small_year):
    model, _ = fast_fit
    aug, dropped = export_augmented(small_year, model.narx, model.scaler)
    L = model.max_lag
    assert aug.features.shape[1] == len(FEATURES) + 1 == 5
    assert aug.columns[-1] == NARX_COLUMN
    assert len(aug) == len(small_year) - L and dropped == L
    assert model.lstm.input_size == 5


def test_identity_oracle_and_csv_fidelity(small_year, tmp_path):
    L = 3

    def oracle(d):
        return d.pv_power[L:], np.arange(L, len(d))

    aug, dropped = export_augmented(small_year, oracle)
    assert dropped == L
    np.testing.assert_array_equal(aug.column(NARX_COLUMN), aug.pv_power)
    write_csv(aug, tmp_path / "aug.csv")
    back = parse_csv(tmp_path / "aug.csv")
    np.testing.assert_array_equal(back.column(NARX_COLUMN), aug.column(NARX_COLUMN))


def test_no_test_set_leakage(small_year):
    train, test = split_chronological(small_year, FAST.train_fraction)
    rng = np.random.default_rng(0)
    scrambled = Dataset(
        small_year.timestamps,
        np.vstack([train.features, rng.uniform(0, 50, test.features.shape)]),
        np.concatenate([train.pv_power, rng.uniform(0, 999, len(test))]),
        small_year.step_seconds,
    )
    a, _ = train_hybrid(small_year, FAST)
    b, _ = train_hybrid(scrambled, FAST)
    assert a.equals(b)


def test_constant_zero_narx_reduces_to_plain_lstm(fast_fit, small_year):
    model, _ = fast_fit
    silent = model.narx.with_params(output_weights=np.zeros(model.narx.hidden_units), output_bias=np.array([0.0]))
    m = HybridModel(silent, model.lstm, model.scaler, model.feature_names, model.seq_len, model.lstm_warmup)
    block = small_year[:300]
    pred = predict_one_step(m, block)
    L = model.max_lag
    const = model.scaler.scale_values(model.scaler.unscale_values(0.0, TARGET), NARX_COLUMN)
    X = np.column_stack([model.scaler.scale_values(block.column(c), c) for c in FEATURES])[L:]
    X = np.column_stack([X, np.full(len(X), const)])
    expect = np.maximum(model.scaler.unscale_values(lstm_mod.predict_series(model.lstm, X, model.seq_len), TARGET), 0)
    assert np.all(np.isnan(pred[:L]))
    np.testing.assert_allclose(pred[L:], expect, rtol=0, atol=1e-9)
    # measured power no longer matters once the NARX stage is silent
    shuffled = Dataset(block.timestamps, block.features, block.pv_power[::-1].copy(), block.step_seconds)
    np.testing.assert_array_equal(predict_one_step(m, shuffled), pred)


def test_horizon_zero(fast_fit, small_year):
    model, _ = fast_fit
    assert predict_hybrid(model, small_year, np.zeros((0, 4))).shape == (0,)


def test_insufficient_history(fast_fit, small_year):
    model, _ = fast_fit
    with pytest.raises(DataError, match="insufficient history"):
        predict_hybrid(model, small_year[:5], weather(small_year[5:10]))


def test_night_forecast_stays_near_zero(month_model):
    data, model = month_model
    i = np.where(data.timestamps % 86400 == 20 * 3600)[0][-2]
    night = data[i:i + 96]
    assert night.column("irradiance").max() == 0.0
    pred = predict_hybrid(model, data[:i], weather(night))
    assert pred.max() <= 0.05 * 250.0


def test_day_ahead_forecast(month_model):
    data, model = month_model
    history, day = data[:len(data) - 288], data[len(data) - 288:]
    pred = predict_hybrid(model, history, weather(day))
    assert pred.shape == (288,)
    assert np.all(np.isfinite(pred)) and pred.min() >= 0.0
    rmse = float(np.sqrt(np.mean((pred - day.pv_power) ** 2)))
    assert rmse < np.sqrt(np.mean(day.pv_power ** 2))  # better than predicting zero


def test_one_step_uses_history_for_lags(fast_fit, small_year):
    model, _ = fast_fit
    block = small_year[1000:1100]
    cold = predict_one_step(model, block)
    warm = predict_one_step(model, block, small_year[:1000])
    assert np.isnan(cold[:model.max_lag]).all() and np.isfinite(warm).all()


def test_determinism(small_year, fast_fit):
    model, rep = fast_fit
    again, rep2 = train_hybrid(small_year, FAST)
    assert again.equals(model) and rep2.same_as(rep)


def test_model_round_trip(fast_fit, small_year, tmp_path):
    model, _ = fast_fit
    save_model(model, tmp_path / "h.json")
    back = load_model(tmp_path / "h.json", "hybrid")
    assert back.equals(model)
    np.testing.assert_array_equal(predict_one_step(back, small_year[:200]), predict_one_step(model, small_year[:200]))


def test_needs_target(small_year):
    with pytest.raises(DataError):
        train_hybrid(small_year.without_target(), FAST)
