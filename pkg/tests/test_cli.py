import json
import os

import numpy as np
import pytest

from heliofor import hybrid
from heliofor.cli import main, run_forecast
from heliofor.config import ConfigError, from_dict, load_config
from heliofor.csvio import CsvError, parse_csv, write_csv
from heliofor.report import parse_report
from heliofor.serialize import load_model
from heliofor.synth import PlantSpec, SynthConfig, generate

QUICK = {
    "seed": 3,
    "synth": {"days": 6},
    "narx": {"epochs": 3},
    "lstm": {"hidden_size": 6, "epochs": 2, "seq_len": 32},
    "search": {"budget": 2, "tune_rows": 400, "tune_epochs": 1, "n_trees": 5},
    "forecast": {"horizon": 48},
}


@pytest.fixture
def cfg_path(tmp_path):
    p = tmp_path / "run.json"
    p.write_text(json.dumps(QUICK))
    return str(p)


def run(*argv):
    return main([str(a) for a in argv])


def error_line(capsys):
    err = capsys.readouterr().err.strip().splitlines()
    return json.loads(err[-1])


# --- CSV ------------------------------------------------------------------


HEADER = "timestamp,irradiance,temperature,wind_speed,relative_humidity,pv_power\n"


def test_parse_three_rows(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text(HEADER + "0,0,10,2,50,0\n300,10.5,11,2,50,1.5\n600,20,12,2,49,3\n")
    d = parse_csv(p)
    assert len(d) == 3 and d.step_seconds == 300
    assert d.pv_power[1] == 1.5


def test_humidity_out_of_range_names_line(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text(HEADER + "0,0,10,2,50,0\n300,0,10,2,140,0\n")
    with pytest.raises(CsvError, match="relative_humidity out of range") as exc:
        parse_csv(p)
    assert exc.value.line == 3 and "line 3" in str(exc.value)


@pytest.mark.parametrize("body, needle", [
    ("0,0,10,2,50,0\n0,0,10,2,50,0\n", "increasing"),
    ("0,0,10,2,50,0\n300,abc,10,2,50,0\n", "column irradiance"),
    ("0,0,10,2,50,0\n300,0,10,2\n", "line 3"),
])
def test_malformed_rows(tmp_path, body, needle):
    p = tmp_path / "d.csv"
    p.write_text(HEADER + body)
    with pytest.raises(CsvError, match=needle):
        parse_csv(p)


def test_csv_round_trip(tmp_path):
    d = generate(PlantSpec(noise_seed=2), SynthConfig(days=2))
    write_csv(d, tmp_path / "x.csv")
    assert parse_csv(tmp_path / "x.csv") == d
    write_csv(d.without_target(), tmp_path / "y.csv")
    assert not parse_csv(tmp_path / "y.csv").has_target


# --- config ---------------------------------------------------------------


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="lstm.foo"):
        from_dict({"lstm": {"foo": 1}})
    with pytest.raises(ConfigError):
        from_dict({"bogus": {}})
    with pytest.raises(ConfigError):
        from_dict({"narx": {"seed": 1}})


def test_config_hash(tmp_path):
    a = from_dict(QUICK)
    assert a.config_hash() == from_dict(json.loads(json.dumps(QUICK))).config_hash()
    moved = from_dict({**QUICK, "paths": {"out": "elsewhere"}})
    assert moved.config_hash() == a.config_hash()
    assert from_dict({**QUICK, "seed": 4}).config_hash() != a.config_hash()
    assert load_config(None).config_hash() == from_dict({}).config_hash()


def test_seeds_derive_from_global_seed():
    a, b = from_dict({"seed": 1}), from_dict({"seed": 2})
    assert a.seeds == from_dict({"seed": 1}).seeds and a.seeds != b.seeds
    assert a.pipeline_config().lstm.seed == a.seeds.lstm
    assert a.pipeline_config().narx.seed == a.seeds.narx


# --- commands -------------------------------------------------------------


def pipeline(cfg_path, out):
    assert run("synth", "--config", cfg_path, "--out", out) == 0
    data = os.path.join(out, "synth.csv")
    assert run("train", "--config", cfg_path, "--data", data, "--out", out) == 0
    model = os.path.join(out, "model.json")
    assert run("forecast", "--config", cfg_path, "--model", model, "--data", data, "--out", out) == 0
    assert run("evaluate", "--config", cfg_path, "--model", model, "--data", data, "--out", out, "--k", 3) == 0
    return data, model


def test_end_to_end(cfg_path, tmp_path):
    out = tmp_path / "o"
    data, model = pipeline(cfg_path, str(out))
    rep = parse_report((out / "report.txt").read_text())
    meta = rep[""]
    assert meta["schema_version"] == "1" and meta["command"] == "evaluate"
    assert meta["config_hash"] == load_config(cfg_path).config_hash()
    for key in ("seed", "seed.narx", "seed.lstm", "seed.search", "seed.synth"):
        assert key in meta
    for key in ("rmse", "mae", "mape"):
        assert np.isfinite(float(rep["metrics"][key]))
    cv = rep["cv"]
    assert cv[0] == ["fold", "start", "stop", "rmse", "mae", "mape"] and len(cv) == 1 + 3 + 1
    fc = (out / "forecast.csv").read_text().splitlines()
    assert fc[0] == "timestamp,actual,predicted" and len(fc) == 1 + 48
    assert (out / "forecast.svg").read_text().startswith("<?xml")


def test_byte_identical_reruns(cfg_path, tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    pipeline(cfg_path, str(a))
    pipeline(cfg_path, str(b))
    names = sorted(os.listdir(a))
    assert names == sorted(os.listdir(b))
    assert {"synth.csv", "model.json", "train_report.txt", "forecast.csv", "forecast.svg", "report.txt"} <= set(names)
    for n in names:
        assert (a / n).read_bytes() == (b / n).read_bytes(), n


def test_serialized_forecast_equals_in_memory(cfg_path, tmp_path):
    out = tmp_path / "o"
    data, model_path = pipeline(cfg_path, str(out))
    d = parse_csv(data)
    model, _ = hybrid.train_hybrid(d, load_config(cfg_path).pipeline_config())
    assert load_model(model_path, "hybrid").equals(model)
    pred, _ = run_forecast(model, d[:len(d) - 48], d[len(d) - 48:])
    written = np.array([float(r.split(",")[2]) for r in (out / "forecast.csv").read_text().splitlines()[1:]])
    np.testing.assert_array_equal(written, pred)


def test_forecast_horizon_zero(cfg_path, tmp_path):
    out = tmp_path / "o"
    data, model = pipeline(cfg_path, str(out))
    assert run("forecast", "--config", cfg_path, "--model", model, "--data", data, "--out", out, "--horizon", 0) == 0
    assert (out / "forecast.csv").read_text() == "timestamp,actual,predicted\n"


def test_compare_and_importance(cfg_path, tmp_path):
    out = tmp_path / "o"
    assert run("synth", "--config", cfg_path, "--out", out) == 0
    data = out / "synth.csv"
    assert run("compare", "--config", cfg_path, "--data", data, "--out", out) == 0
    table = parse_report((out / "compare.txt").read_text())["comparison"]
    assert len(table) == 1 + 4 and all(row[-1] == "ok" for row in table[1:])
    assert (out / "compare.svg").exists()
    assert run("importance", "--config", cfg_path, "--data", data, "--out", out) == 0
    ranking = parse_report((out / "importance.txt").read_text())["ranking"]
    assert ranking[1][1] == "irradiance"
    assert (out / "importance.svg").exists()


def test_error_is_one_json_line_and_rolls_back(cfg_path, tmp_path, capsys):
    out = tmp_path / "o"
    bad = tmp_path / "bad.csv"
    bad.write_text(HEADER + "0,0,10,2,50,0\n300,0,10,2,140,0\n")
    assert run("importance", "--config", cfg_path, "--data", bad, "--out", out) == 1
    err = error_line(capsys)
    assert err["error"] == "data" and err["command"] == "importance"
    assert "line 3" in err["message"] and "relative_humidity out of range" in err["message"]
    assert os.listdir(out) == []


def test_partial_outputs_removed(cfg_path, tmp_path, monkeypatch, capsys):
    out = tmp_path / "o"
    run("synth", "--config", cfg_path, "--out", out)
    data = out / "synth.csv"

    def boom(*a, **k):
        raise RuntimeError("plot failed")

    import heliofor.plotting

    monkeypatch.setattr(heliofor.plotting, "importance_plot", boom)
    assert run("importance", "--config", cfg_path, "--data", data, "--out", out) == 1
    assert error_line(capsys)["message"] == "plot failed"
    assert sorted(os.listdir(out)) == ["synth.csv"]


def test_usage_and_config_errors(tmp_path, capsys):
    assert run("train", "--out", tmp_path) == 2
    assert error_line(capsys)["error"] == "usage"
    cfg = tmp_path / "c.json"
    cfg.write_text('{"lstm": {"foo": 1}}')
    assert run("synth", "--config", cfg, "--out", tmp_path) == 1
    err = error_line(capsys)
    assert err["error"] == "config" and "lstm.foo" in err["message"]
