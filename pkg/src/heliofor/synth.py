"""Synthetic PV plant data with a known generative structure.

Irradiance is a clear-sky half sine over a seasonally varying day, attenuated
by a persistent AR(1) cloud process. Temperature, humidity and wind follow
simple diurnal/seasonal/noise processes, and PV power is a derated linear
function of irradiance:

    P = rated * efficiency * G/1000 * (1 - gamma * (T_cell - 25)) * (1 + noise)
    T_cell = T_air + 0.03 * G

The noise term is mostly a slowly drifting plant-side factor, so recent
measured power carries information that same-step weather does not.

Humidity and wind speed do not enter the power equation at all, which makes
the true feature ranking known in advance.
"""

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .core import FEATURES, Dataset

DAY = 86400
START_2018_04_01 = 1522540800
CELL_TEMP_SLOPE = 0.03
DECIMALS = 4
DRIFT_STD = 0.03
DRIFT_PERSISTENCE = 0.995
WHITE_STD = 0.005


@dataclass(frozen=True)
class PlantSpec:
    rated_power: float = 250.0
    efficiency: float = 0.9
    temp_coeff: float = 0.004
    latitude_phase: float = 0.0
    noise_seed: int = 7

    def __post_init__(self):
        if self.rated_power <= 0:
            raise ValueError("rated_power must be > 0")
        if not 0 < self.efficiency <= 1:
            raise ValueError("efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class SynthConfig:
    start_timestamp: int = START_2018_04_01
    days: int = 365
    step_seconds: int = 300
    cloud_persistence: float = 0.98
    cloud_depth: float = 0.7

    def __post_init__(self):
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if self.step_seconds <= 0 or DAY % self.step_seconds:
            raise ValueError("step_seconds must divide a day")
        if not 0 <= self.cloud_persistence < 1:
            raise ValueError("cloud_persistence must lie in [0, 1)")
        if not 0 <= self.cloud_depth <= 1:
            raise ValueError("cloud_depth must lie in [0, 1]")


def _ar1(rng, n, rho):
    """Stationary unit-variance AR(1) path."""
    eps = rng.standard_normal(n)
    z0 = rng.standard_normal()
    out, _ = lfilter([np.sqrt(1.0 - rho * rho)], [1.0, -rho], eps, zi=[rho * z0])
    return out


def clear_sky(seconds_of_day, season_angle):
    """Half-sine clear-sky irradiance (W/m^2), zero outside daylight."""
    hours = seconds_of_day / 3600.0
    day_length = 12.0 + 2.5 * np.cos(season_angle)
    sunrise = 12.0 - day_length / 2.0
    peak = 950.0 + 150.0 * np.cos(season_angle)
    phase = (hours - sunrise) / day_length
    g = peak * np.sin(np.pi * phase)
    return np.where((phase > 0) & (phase < 1), np.maximum(g, 0.0), 0.0)


def power_model(spec: PlantSpec, irradiance, temperature):
    cell = temperature + CELL_TEMP_SLOPE * irradiance
    return spec.rated_power * spec.efficiency * (irradiance / 1000.0) * (1.0 - spec.temp_coeff * (cell - 25.0))


def generate(spec: PlantSpec = PlantSpec(), cfg: SynthConfig = SynthConfig()) -> Dataset:
    n = cfg.days * (DAY // cfg.step_seconds)
    rng = np.random.default_rng(spec.noise_seed)
    ts = cfg.start_timestamp + np.arange(n, dtype=np.int64) * cfg.step_seconds
    elapsed = (ts - cfg.start_timestamp) / DAY
    sod = (ts % DAY).astype(np.float64)
    season = 2.0 * np.pi * elapsed / 365.0 + spec.latitude_phase

    cloud = _ar1(rng, n, cfg.cloud_persistence)
    attenuation = cfg.cloud_depth / (1.0 + np.exp(-3.0 * (cloud - 0.5)))
    irradiance = np.round(clear_sky(sod, season) * (1.0 - attenuation), DECIMALS)

    temp_noise = _ar1(rng, n, 0.995)
    diurnal = np.sin(2.0 * np.pi * (sod / 3600.0 - 9.0) / 24.0)
    temperature = np.round(20.0 + 6.0 * np.cos(season) + 5.0 * diurnal + 1.5 * temp_noise, DECIMALS)

    rh_noise = _ar1(rng, n, 0.99)
    humidity = np.round(np.clip(60.0 - 2.5 * (temperature - 20.0) + 8.0 * rh_noise, 0.0, 100.0), DECIMALS)

    wind = np.round(3.0 * np.exp(0.4 * _ar1(rng, n, 0.995)), DECIMALS)

    # plant-side deviation the weather inputs cannot see (soiling, local
    # shading, sensor/array mismatch): slow AR(1) plus a little white noise
    noise = 1.0 + DRIFT_STD * _ar1(rng, n, DRIFT_PERSISTENCE) + WHITE_STD * rng.standard_normal(n)
    power = np.round(np.maximum(power_model(spec, irradiance, temperature) * noise, 0.0), DECIMALS)

    X = np.column_stack([irradiance, temperature, wind, humidity])
    return Dataset(ts, X, power, cfg.step_seconds, FEATURES)


def ground_truth_importance(spec: PlantSpec = PlantSpec(), cfg: SynthConfig = None):
    """Ranking of the generator's inputs by their effect on power.

    Importance of a feature is the daylight mean of ``|dP/dx|`` times the
    feature's daylight standard deviation, normalised to sum to one. Features
    absent from the power equation score exactly zero.
    """
    cfg = cfg or SynthConfig(days=60)
    data = generate(spec, cfg)
    G = data.column("irradiance")
    T = data.column("temperature")
    day = G > 0
    k = spec.rated_power * spec.efficiency / 1000.0
    cell = T + CELL_TEMP_SLOPE * G
    dP_dG = k * (1.0 - spec.temp_coeff * (cell - 25.0)) - k * G * spec.temp_coeff * CELL_TEMP_SLOPE
    dP_dT = -k * G * spec.temp_coeff
    raw = {
        "irradiance": np.mean(np.abs(dP_dG[day])) * np.std(G[day]),
        "temperature": np.mean(np.abs(dP_dT[day])) * np.std(T[day]),
        "wind_speed": 0.0,
        "relative_humidity": 0.0,
    }
    total = sum(raw.values())
    order = sorted(FEATURES, key=lambda f: -raw[f])
    return tuple((f, float(raw[f] / total)) for f in order)
