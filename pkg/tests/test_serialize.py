import json

import numpy as np
import pytest

from heliofor.lstm import init_stack
from heliofor.narx import NarxConfig, init_network
from heliofor.serialize import FormatError, load_model, loads, save_model


def test_narx_round_trip_is_bit_exact(tmp_path, rng):
    net = init_network(NarxConfig(d_u=3, d_y=1, hidden_units=4, seed=2), 4)
    net = net.with_params(input_weights=rng.normal(size=net.input_weights.shape) / 3)
    save_model(net, tmp_path / "n.json")
    back = load_model(tmp_path / "n.json", "narx")
    assert back.equals(net)
    save_model(back, tmp_path / "n2.json")
    assert (tmp_path / "n.json").read_bytes() == (tmp_path / "n2.json").read_bytes()


def test_awkward_floats_survive(tmp_path):
    stack = init_stack(2, (3,), seed=0)
    w = stack.head_weights.copy()
    w[:] = [1e-300, -0.1 + 0.2, np.nextafter(1.0, 2.0)]
    from dataclasses import replace

    stack = replace(stack, head_weights=w)
    save_model(stack, tmp_path / "s.json")
    np.testing.assert_array_equal(load_model(tmp_path / "s.json").head_weights, w)


def test_format_errors(tmp_path):
    with pytest.raises(FormatError, match="not a model file"):
        loads("{nope")
    with pytest.raises(FormatError, match="not a heliofor model"):
        loads(json.dumps({"format": "other"}))
    with pytest.raises(FormatError, match="version"):
        loads(json.dumps({"format": "heliofor-model", "version": 99}))
    save_model(init_stack(1, (2,), seed=0), tmp_path / "s.json")
    with pytest.raises(FormatError, match="expected a hybrid model"):
        load_model(tmp_path / "s.json", "hybrid")
    with pytest.raises(TypeError):
        save_model(object(), tmp_path / "x.json")
