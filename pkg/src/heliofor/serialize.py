"""Versioned JSON container for fitted models.

Floats are written with ``repr`` semantics (the json module's default), which
round-trips every float64 exactly, so a save/load cycle is bit-exact. Keys
are sorted and no timestamps are embedded, so identical models serialise to
identical bytes.

Layout::

    {"format": "heliofor-model", "version": 1, "kind": "narx" | "lstm" | "hybrid",
     "payload": {...}}
"""

import json

import numpy as np

FORMAT = "heliofor-model"
VERSION = 1


class FormatError(ValueError):
    pass


def encode_array(a):
    a = np.asarray(a)
    return {"dtype": str(a.dtype), "shape": list(a.shape), "data": a.reshape(-1).tolist()}


def decode_array(d):
    return np.array(d["data"], dtype=d["dtype"]).reshape(d["shape"])


def dumps(kind, payload):
    return json.dumps({"format": FORMAT, "version": VERSION, "kind": kind, "payload": payload},
                      sort_keys=True, indent=1) + "\n"


def loads(text, expect_kind=None):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not a model file: {exc}") from None
    if doc.get("format") != FORMAT:
        raise FormatError("not a heliofor model file")
    if doc.get("version") != VERSION:
        raise FormatError(f"unsupported model version {doc.get('version')!r}")
    if expect_kind is not None and doc.get("kind") != expect_kind:
        raise FormatError(f"expected a {expect_kind} model, found {doc.get('kind')!r}")
    return doc["kind"], doc["payload"]


def save_model(model, path):
    from . import hybrid, lstm, narx

    if isinstance(model, narx.NarxNetwork):
        text = dumps("narx", narx.to_dict(model))
    elif isinstance(model, lstm.LstmStack):
        text = dumps("lstm", lstm.to_dict(model))
    elif isinstance(model, hybrid.HybridModel):
        text = dumps("hybrid", hybrid.to_dict(model))
    else:
        raise TypeError(f"cannot serialise {type(model).__name__}")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def load_model(path, expect_kind=None):
    from . import hybrid, lstm, narx

    with open(path, encoding="utf-8") as fh:
        kind, payload = loads(fh.read(), expect_kind)
    return {"narx": narx.from_dict, "lstm": lstm.from_dict, "hybrid": hybrid.from_dict}[kind](payload)
