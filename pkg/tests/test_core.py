import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heliofor.core import (
    FEATURES,
    Dataset,
    DataError,
    MinMaxScaler,
    WeatherRecord,
    concat,
    fit_scaler,
    inverse_transform,
    make_windows,
    regressor_matrix,
    split_chronological,
    transform,
)


def make_data(n, step=300, with_power=True, seed=0):
    rng = np.random.default_rng(seed)
    X = np.column_stack([
        rng.uniform(0, 1000, n), rng.uniform(-5, 35, n), rng.uniform(0, 10, n), rng.uniform(0, 100, n)
    ])
    y = rng.uniform(0, 250, n) if with_power else None
    return Dataset(1_000_000 + step * np.arange(n), X, y, step)


def test_record_invariants():
    WeatherRecord(0, 0.0, 10.0, 2.0, 50.0, 0.0)
    with pytest.raises(DataError, match="irradiance"):
        WeatherRecord(0, -1.0, 10.0, 2.0, 50.0)
    with pytest.raises(DataError, match="relative_humidity out of range"):
        WeatherRecord(0, 1.0, 10.0, 2.0, 140.0)
    with pytest.raises(DataError, match="pv_power"):
        WeatherRecord(0, 1.0, 10.0, 2.0, 40.0, -0.1)


def test_dataset_rejects_bad_time_axis():
    X = np.ones((3, 4))
    with pytest.raises(DataError, match="strictly increasing"):
        Dataset(np.array([0, 300, 300]), X)
    with pytest.raises(DataError, match="gap"):
        Dataset(np.array([0, 300, 900]), X)
    X[1, 0] = np.nan
    with pytest.raises(DataError, match="non-finite"):
        Dataset(np.array([0, 300, 600]), X)


def test_records_round_trip():
    d = make_data(6)
    assert Dataset.from_records(d.records, d.step_seconds) == d


def test_fit_scaler_extrema():
    X = np.array([[0.0, 3.0], [5.0, 3.0], [10.0, 3.0]])
    s = MinMaxScaler.from_array(X, ("a", "b"))
    assert list(s.mins) == [0.0, 3.0] and list(s.maxs) == [10.0, 3.0]
    assert s.scale_values(5.0, "a") == 0.5
    assert s.scale_values(0.0, "a") == 0.0
    assert s.scale_values(7.0, "b") == 0.0  # degenerate column
    two = MinMaxScaler.from_array(np.array([[1.0, 10.0], [3.0, 20.0]]), ("x", "y"))
    assert list(two.mins) == [1.0, 10.0] and list(two.maxs) == [3.0, 20.0]


def test_fit_scaler_empty():
    empty = Dataset(np.zeros(0, np.int64), np.zeros((0, 4)), np.zeros(0))
    with pytest.raises(DataError, match="empty input"):
        fit_scaler(empty)


def test_inverse_examples():
    s = MinMaxScaler(("a", "b", "c"), np.array([0.0, -2.0, 1.0]), np.array([10.0, 6.0, 9.0]))
    assert s.unscale_values(0.5, "a") == 5.0
    assert s.unscale_values(1.0, "b") == 6.0
    assert abs(s.unscale_values(s.scale_values(3.7, "c"), "c") - 3.7) <= 1e-12 * 3.7
    with pytest.raises(KeyError):
        s.scale_values(1.0, "nope")


def test_transform_extrapolates_without_clipping():
    d = make_data(50)
    s = fit_scaler(d)
    sc = transform(s, d)
    assert sc.features.min() >= 0.0 and sc.features.max() <= 1.0
    assert s.scale_values(2000.0, "irradiance") > 1.0


def test_transform_schema_mismatch():
    d = make_data(10)
    s = MinMaxScaler(("irradiance",), np.zeros(1), np.ones(1))
    with pytest.raises(DataError):
        transform(s, d)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1e6, 1e6, allow_nan=False), min_size=2, max_size=40))
def test_scaler_round_trip_property(values):
    v = np.array(values)
    if v.max() == v.min():
        return
    s = MinMaxScaler.from_array(v[:, None], ("a",))
    back = s.unscale_values(s.scale_values(v, "a"), "a")
    assert np.all(np.abs(back - v) <= 1e-12 * np.maximum(np.abs(v), np.abs(v).max()) + 1e-300)


def test_make_windows_counting():
    d = Dataset(np.arange(5) * 300, np.arange(5.0)[:, None], np.arange(5.0), 300, ("irradiance",), scaled=True)
    w = make_windows(d, 2, 1)
    assert w.inputs.shape == (3, 3)


def test_make_windows_hand_oracle():
    u = np.array([1.0, 2.0, 3.0, 4.0])
    y = np.array([10.0, 20.0, 30.0, 40.0])
    R, tidx = regressor_matrix(u[:, None], y, 2, 2)
    assert list(R[0]) == [2.0, 1.0, 20.0, 10.0]
    assert y[tidx[0]] == 30.0


def test_make_windows_tdnn_reduction():
    d = make_data(10)
    w = make_windows(d, 1, 0)
    assert w.inputs.shape == (9, 4)
    np.testing.assert_array_equal(w.inputs, d.features[:-1])
    np.testing.assert_array_equal(w.targets, d.pv_power[1:])


def test_make_windows_insufficient_history():
    with pytest.raises(DataError, match="insufficient history"):
        make_windows(make_data(2), 2, 2)


def test_window_overlap_property():
    d = make_data(30)
    d_u, d_y = 3, 2
    w = make_windows(d, d_u, d_y)
    F = 4
    for i in range(len(w) - 1):
        np.testing.assert_array_equal(w.inputs[i + 1, F:d_u * F], w.inputs[i, :(d_u - 1) * F])
        ylag = w.inputs[:, d_u * F:]
        np.testing.assert_array_equal(ylag[i + 1, 1:], ylag[i, :-1])


def test_split_examples():
    tr, te = split_chronological(make_data(10), 0.8)
    assert (len(tr), len(te)) == (8, 2)
    tr, te = split_chronological(make_data(5), 0.5)
    assert (len(tr), len(te)) == (2, 3)
    assert tr.timestamps[-1] < te.timestamps[0]
    with pytest.raises(ValueError):
        split_chronological(make_data(5), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.floats(0.05, 0.95))
def test_split_concat_reproduces(n, frac):
    d = make_data(n)
    tr, te = split_chronological(d, frac)
    assert len(tr) + len(te) == n
    assert len(tr) == int(np.floor(n * frac))
    if len(tr) and len(te):
        assert concat([tr, te]) == d


def test_with_column_and_base_order():
    d = make_data(4)
    aug = d.with_column("narx_power", [1.0, 2.0, 3.0, 4.0])
    assert aug.columns == FEATURES + ("narx_power",)
    np.testing.assert_array_equal(aug.column("narx_power"), [1.0, 2.0, 3.0, 4.0])


def test_inverse_transform_function():
    s = MinMaxScaler(("pv_power",), np.array([0.0]), np.array([250.0]))
    assert inverse_transform(s, 0.5, "pv_power") == 125.0
