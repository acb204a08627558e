import numpy as np
import pytest

from heliofor.core import FEATURES, WeatherRecord
from heliofor.linear import fit_elastic_net, rank_features
from heliofor.synth import PlantSpec, SynthConfig, clear_sky, generate, ground_truth_importance


@pytest.fixture(scope="module")
def year():
    return generate()


def test_year_length(year):
    assert len(year) == 365 * 288 == 105120
    assert year.step_seconds == 300
    assert np.all(np.diff(year.timestamps) == 300)


def test_midnight_and_night_zeros(year):
    midnight = year.timestamps % 86400 == 0
    assert np.all(year.column("irradiance")[midnight] == 0.0)
    night = year.column("irradiance") == 0.0
    assert night.any() and np.all(year.pv_power[night] == 0.0)


def test_records_satisfy_invariants():
    d = generate(PlantSpec(noise_seed=3), SynthConfig(days=5))
    for r in d.records:
        assert isinstance(r, WeatherRecord)
    assert d.column("relative_humidity").min() >= 0 and d.column("relative_humidity").max() <= 100
    assert d.column("wind_speed").min() > 0


def test_deterministic():
    a = generate(PlantSpec(noise_seed=5), SynthConfig(days=3))
    b = generate(PlantSpec(noise_seed=5), SynthConfig(days=3))
    c = generate(PlantSpec(noise_seed=6), SynthConfig(days=3))
    assert a == b and not a == c


def test_daylight_power_tracks_irradiance(year):
    day = year.column("irradiance") > 0
    r = np.corrcoef(year.column("irradiance")[day], year.pv_power[day])[0, 1]
    assert r > 0.9


def test_humidity_anticorrelated_with_temperature(year):
    r = np.corrcoef(year.column("temperature"), year.column("relative_humidity"))[0, 1]
    assert r < 0


def test_clear_sky_shape():
    s = np.arange(0, 86400, 300.0)
    g = clear_sky(s, 0.0)
    assert g.min() == 0.0 and g[0] == 0.0
    assert abs(s[np.argmax(g)] / 3600 - 12) <= 300 / 3600


def test_ground_truth_importance():
    ranking = dict(ground_truth_importance())
    assert list(dict(ground_truth_importance()))[0] == "irradiance"
    assert ranking["wind_speed"] == 0.0 and ranking["relative_humidity"] == 0.0
    assert abs(sum(ranking.values()) - 1.0) < 1e-12
    flat = dict(ground_truth_importance(PlantSpec(temp_coeff=0.0)))
    assert flat["temperature"] == 0.0


@pytest.mark.parametrize("seed", [1, 2, 3])
def test_ground_truth_ranking_stable_across_seeds(seed):
    order = [n for n, _ in ground_truth_importance(PlantSpec(noise_seed=seed), SynthConfig(days=20))]
    assert order[:2] == ["irradiance", "temperature"]


def test_elastic_net_puts_irradiance_first():
    d = generate(PlantSpec(noise_seed=21), SynthConfig(days=30))
    X = np.column_stack([d.column(c) for c in FEATURES])
    ranking = rank_features(fit_elastic_net(X, d.pv_power, 0.01, 0.5), FEATURES)
    assert ranking.names()[0] == "irradiance"


def test_config_validation():
    with pytest.raises(ValueError):
        PlantSpec(rated_power=0)
    with pytest.raises(ValueError):
        SynthConfig(days=0)
    with pytest.raises(ValueError):
        SynthConfig(cloud_persistence=1.0)
