"""Data model, chronological splitting, min-max scaling and delay windows.

Datasets are stored column-wise (one float64 matrix for the exogenous
features, one vector for PV power) because every model downstream consumes
arrays; :class:`WeatherRecord` is the row view used at the edges (CSV, tests).
"""

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

FEATURES = ("irradiance", "temperature", "wind_speed", "relative_humidity")
TARGET = "pv_power"
NARX_COLUMN = "narx_power"
DEFAULT_STEP = 300


class DataError(ValueError):
    """Raised when a dataset violates its invariants."""


@dataclass(frozen=True)
class WeatherRecord:
    timestamp: int
    irradiance: float
    temperature: float
    wind_speed: float
    relative_humidity: float
    pv_power: Optional[float] = None

    def __post_init__(self):
        if self.irradiance < 0:
            raise DataError("irradiance must be >= 0")
        if not 0.0 <= self.relative_humidity <= 100.0:
            raise DataError("relative_humidity out of range")
        if self.pv_power is not None and self.pv_power < 0:
            raise DataError("pv_power must be >= 0")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Equally spaced weather/PV series.

    ``features`` has one column per name in ``columns`` (the four exogenous
    variables, optionally followed by derived columns such as the NARX power
    estimate). ``scaled`` datasets skip the physical range checks, since
    min-max scaling deliberately lets out-of-range values leave [0, 1].
    """

    timestamps: np.ndarray
    features: np.ndarray
    pv_power: Optional[np.ndarray] = None
    step_seconds: int = DEFAULT_STEP
    columns: tuple = FEATURES
    scaled: bool = False

    def __post_init__(self):
        # private copies: freezing must not touch the caller's arrays
        ts = np.array(self.timestamps, dtype=np.int64)
        X = np.array(self.features, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        y = None if self.pv_power is None else np.array(self.pv_power, dtype=np.float64)
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "pv_power", y)
        object.__setattr__(self, "columns", tuple(self.columns))
        for arr in (ts, X, y):
            if arr is not None:
                arr.setflags(write=False)
        self._validate()

    def _validate(self):
        ts, X, y = self.timestamps, self.features, self.pv_power
        if ts.ndim != 1 or X.shape[0] != ts.shape[0]:
            raise DataError("timestamps and features disagree in length")
        if X.shape[1] != len(self.columns):
            raise DataError(f"expected {len(self.columns)} feature columns, got {X.shape[1]}")
        if y is not None and y.shape != ts.shape:
            raise DataError("pv_power and timestamps disagree in length")
        if self.step_seconds <= 0:
            raise DataError("step_seconds must be positive")
        if len(ts) > 1:
            gaps = np.diff(ts)
            if np.any(gaps <= 0):
                raise DataError("timestamps must be strictly increasing")
            if np.any(gaps != self.step_seconds):
                bad = int(np.flatnonzero(gaps != self.step_seconds)[0]) + 1
                raise DataError(f"gap at row {bad} differs from step_seconds={self.step_seconds}")
        if not np.all(np.isfinite(X)) or (y is not None and not np.all(np.isfinite(y))):
            raise DataError("missing or non-finite values")
        if self.scaled:
            return
        cols = self.columns
        if "irradiance" in cols and np.any(X[:, cols.index("irradiance")] < 0):
            raise DataError("irradiance must be >= 0")
        if "relative_humidity" in cols:
            rh = X[:, cols.index("relative_humidity")]
            if np.any((rh < 0) | (rh > 100)):
                raise DataError("relative_humidity out of range")
        if y is not None and np.any(y < 0):
            raise DataError("pv_power must be >= 0")

    def __len__(self):
        return self.timestamps.shape[0]

    def __getitem__(self, item):
        if not isinstance(item, slice) or item.step not in (None, 1):
            raise TypeError("datasets support contiguous slicing only")
        return Dataset(
            self.timestamps[item],
            self.features[item],
            None if self.pv_power is None else self.pv_power[item],
            self.step_seconds,
            self.columns,
            self.scaled,
        )

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        same_y = (self.pv_power is None and other.pv_power is None) or (
            self.pv_power is not None
            and other.pv_power is not None
            and np.array_equal(self.pv_power, other.pv_power)
        )
        return (
            self.columns == other.columns
            and self.step_seconds == other.step_seconds
            and self.scaled == other.scaled
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.features, other.features)
            and same_y
        )

    @property
    def has_target(self):
        return self.pv_power is not None

    def column(self, name):
        if name == TARGET:
            if self.pv_power is None:
                raise KeyError("dataset has no pv_power column")
            return self.pv_power
        return self.features[:, self.columns.index(name)]

    @property
    def records(self):
        """Row view as :class:`WeatherRecord` (base features only)."""
        base = [self.columns.index(c) for c in FEATURES]
        out = []
        for i in range(len(self)):
            row = self.features[i, base]
            out.append(
                WeatherRecord(
                    int(self.timestamps[i]),
                    *map(float, row),
                    pv_power=None if self.pv_power is None else float(self.pv_power[i]),
                )
            )
        return out

    @classmethod
    def from_records(cls, records: Sequence[WeatherRecord], step_seconds=DEFAULT_STEP):
        if not records:
            return cls(np.zeros(0, np.int64), np.zeros((0, len(FEATURES))), None, step_seconds)
        has_power = [r.pv_power is not None for r in records]
        if any(has_power) and not all(has_power):
            raise DataError("pv_power must be present on all records or none")
        ts = [r.timestamp for r in records]
        X = [[r.irradiance, r.temperature, r.wind_speed, r.relative_humidity] for r in records]
        y = [r.pv_power for r in records] if all(has_power) else None
        return cls(np.array(ts), np.array(X, dtype=float), y, step_seconds)

    def with_column(self, name, values):
        """Return a copy with an extra feature column appended."""
        values = np.asarray(values, dtype=np.float64).reshape(-1, 1)
        return Dataset(
            self.timestamps,
            np.hstack([self.features, values]),
            self.pv_power,
            self.step_seconds,
            self.columns + (name,),
            self.scaled,
        )

    def without_target(self):
        return Dataset(self.timestamps, self.features, None, self.step_seconds, self.columns, self.scaled)


def concat(parts):
    """Join contiguous datasets end to end (validates continuity)."""
    parts = list(parts)
    first = parts[0]
    y = None if first.pv_power is None else np.concatenate([p.pv_power for p in parts])
    return Dataset(
        np.concatenate([p.timestamps for p in parts]),
        np.vstack([p.features for p in parts]),
        y,
        first.step_seconds,
        first.columns,
        first.scaled,
    )


@dataclass(frozen=True, eq=False)
class MinMaxScaler:
    """Per-column affine map onto [0, 1] fitted on training data.

    Degenerate columns (max == min) map to 0. Values outside the fitted
    range are mapped by the same affine rule, not clipped.
    """

    columns: tuple
    mins: np.ndarray
    maxs: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "mins", np.asarray(self.mins, dtype=np.float64))
        object.__setattr__(self, "maxs", np.asarray(self.maxs, dtype=np.float64))
        if self.mins.shape != (len(self.columns),) or self.maxs.shape != self.mins.shape:
            raise ValueError("mins/maxs must have one entry per column")
        if np.any(self.maxs < self.mins):
            raise ValueError("max < min for some column")

    def __eq__(self, other):
        return (
            isinstance(other, MinMaxScaler)
            and self.columns == other.columns
            and np.array_equal(self.mins, other.mins)
            and np.array_equal(self.maxs, other.maxs)
        )

    @classmethod
    def from_array(cls, X, columns):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.shape[0] == 0:
            raise DataError("empty input")
        return cls(columns, X.min(axis=0), X.max(axis=0))

    def _index(self, column):
        try:
            return self.columns.index(column)
        except ValueError:
            raise KeyError(f"unknown column {column!r}") from None

    def scale_values(self, values, column):
        j = self._index(column)
        lo, hi = self.mins[j], self.maxs[j]
        values = np.asarray(values, dtype=np.float64)
        if hi == lo:
            return np.zeros_like(values)
        return (values - lo) / (hi - lo)

    def unscale_values(self, values, column):
        j = self._index(column)
        lo, hi = self.mins[j], self.maxs[j]
        return np.asarray(values, dtype=np.float64) * (hi - lo) + lo

    def extended(self, column, values):
        """Scaler with one more column fitted on ``values``."""
        values = np.asarray(values, dtype=np.float64)
        if values.size == 0:
            raise DataError("empty input")
        return MinMaxScaler(
            self.columns + (column,),
            np.append(self.mins, values.min()),
            np.append(self.maxs, values.max()),
        )

    def to_dict(self):
        return {"columns": list(self.columns), "mins": self.mins.tolist(), "maxs": self.maxs.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(tuple(d["columns"]), d["mins"], d["maxs"])


def fit_scaler(data: Dataset) -> MinMaxScaler:
    """Fit per-column extrema over every feature column and the target."""
    if len(data) == 0:
        raise DataError("empty input")
    cols = data.columns
    mins = list(data.features.min(axis=0))
    maxs = list(data.features.max(axis=0))
    if data.has_target:
        cols = cols + (TARGET,)
        mins.append(data.pv_power.min())
        maxs.append(data.pv_power.max())
    return MinMaxScaler(cols, mins, maxs)


def transform(scaler: MinMaxScaler, data: Dataset) -> Dataset:
    for c in data.columns:
        if c not in scaler.columns:
            raise DataError(f"scaler has no column {c!r}")
    if data.has_target and TARGET not in scaler.columns:
        raise DataError("scaler has no pv_power column")
    X = np.column_stack([scaler.scale_values(data.features[:, j], c) for j, c in enumerate(data.columns)])
    y = None if not data.has_target else scaler.scale_values(data.pv_power, TARGET)
    return Dataset(data.timestamps, X.reshape(len(data), -1), y, data.step_seconds, data.columns, scaled=True)


def inverse_transform(scaler: MinMaxScaler, scaled, column):
    """Map a scaled value (or array) of ``column`` back to physical units."""
    out = scaler.unscale_values(scaled, column)
    return float(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True, eq=False)
class SupervisedWindows:
    """Tapped-delay regression rows.

    Row for step ``n`` is ``[u(n), u(n-1), ..., u(n-d_u+1), y(n), ...,
    y(n-d_y+1)]`` (newest first within each block); its target is
    ``y(n+1)``. ``target_index`` holds ``n+1`` relative to the source series.
    """

    inputs: np.ndarray
    targets: np.ndarray
    d_u: int
    d_y: int
    target_index: np.ndarray = field(default=None)

    def __len__(self):
        return self.inputs.shape[0]


def regressor_matrix(U, y, d_u, d_y):
    """Build regressor rows from raw arrays (``y`` may be None when ``d_y == 0``)."""
    n, F = U.shape
    L = max(d_u, d_y)
    rows = n - L
    R = np.empty((rows, d_u * F + d_y))
    steps = np.arange(L - 1, n - 1)
    for lag in range(d_u):
        R[:, lag * F:(lag + 1) * F] = U[steps - lag]
    for lag in range(d_y):
        R[:, d_u * F + lag] = y[steps - lag]
    return R, steps + 1


def make_windows(data: Dataset, d_u: int, d_y: int, columns=None) -> SupervisedWindows:
    if d_u < 1 or d_y < 0:
        raise ValueError("need d_u >= 1 and d_y >= 0")
    if not data.has_target:
        raise DataError("windows need a pv_power target")
    L = max(d_u, d_y)
    if len(data) <= L:
        raise DataError("insufficient history")
    U = data.features if columns is None else np.column_stack([data.column(c) for c in columns])
    R, tidx = regressor_matrix(U, data.pv_power, d_u, d_y)
    return SupervisedWindows(R, data.pv_power[tidx].copy(), d_u, d_y, tidx)


def split_chronological(data: Dataset, train_fraction: float):
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    cut = int(np.floor(len(data) * train_fraction))
    return data[:cut], data[cut:]
