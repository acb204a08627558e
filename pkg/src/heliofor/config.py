"""Run configuration: a JSON file mapped onto the library's config dataclasses.

Layout (every key optional, unknown keys rejected)::

    {
      "seed": 0,
      "plant":      {"rated_power": 250.0, "efficiency": 0.9, "temp_coeff": 0.004,
                     "latitude_phase": 0.0, "noise_seed": 7},
      "synth":      {"start_timestamp": 1522540800, "days": 365, "step_seconds": 300,
                     "cloud_persistence": 0.98, "cloud_depth": 0.7},
      "narx":       {"d_u": 2, "d_y": 2, "hidden_units": 10, "learning_rate": 0.1,
                     "epochs": 30, "batch_size": 32},
      "lstm":       {"hidden_size": 16, "n_layers": 3, "epochs": 20, ...},
      "pipeline":   {"train_fraction": 0.8, "lstm_warmup": 16},
      "search":     {"budget": 20, "tune_rows": 4032, "tune_val_fraction": 0.25,
                     "tune_epochs": 15, "n_trees": 30},
      "forecast":   {"horizon": 288},
      "evaluate":   {"cv_folds": 0},
      "importance": {"lam": 0.01, "l1_ratio": 0.5},
      "paths":      {"data": null, "model": null, "out": "out"}
    }

Model seeds are not configured per section: the NARX, LSTM, search and
tree seeds are all drawn from one generator seeded with the global ``seed``.
"""

import hashlib
import json
from dataclasses import asdict, dataclass, fields, replace

import numpy as np

from .evaluation.compare import CompareConfig
from .hybrid import PipelineConfig
from .lstm import LstmConfig
from .narx import NarxConfig
from .synth import PlantSpec, SynthConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ForecastSettings:
    horizon: int = 288


@dataclass(frozen=True)
class EvaluateSettings:
    cv_folds: int = 0


@dataclass(frozen=True)
class ImportanceSettings:
    lam: float = 0.01
    l1_ratio: float = 0.5


@dataclass(frozen=True)
class SearchSettings:
    budget: int = 20
    tune_rows: int = 4032
    tune_val_fraction: float = 0.25
    tune_epochs: int = 15
    n_trees: int = 30


@dataclass(frozen=True)
class PipelineSettings:
    train_fraction: float = 0.8
    lstm_warmup: int = 16


@dataclass(frozen=True)
class Paths:
    data: str = None
    model: str = None
    out: str = "out"


_SECTIONS = {
    "plant": PlantSpec,
    "synth": SynthConfig,
    "narx": NarxConfig,
    "lstm": LstmConfig,
    "pipeline": PipelineSettings,
    "search": SearchSettings,
    "forecast": ForecastSettings,
    "evaluate": EvaluateSettings,
    "importance": ImportanceSettings,
    "paths": Paths,
}
# seeds of trainable models come from the global seed, never from sections
_DERIVED = {"narx": {"seed"}, "lstm": {"seed"}}


@dataclass(frozen=True)
class Seeds:
    narx: int
    lstm: int
    search: int


def derive_seeds(seed: int) -> Seeds:
    """Draw the per-component seeds from one generator seeded with ``seed``."""
    rng = np.random.default_rng(seed)
    a, b, c = (int(v) for v in rng.integers(0, 2**31 - 1, size=3))
    return Seeds(a, b, c)


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    plant: PlantSpec = PlantSpec()
    synth: SynthConfig = SynthConfig()
    narx: NarxConfig = NarxConfig()
    lstm: LstmConfig = LstmConfig()
    pipeline: PipelineSettings = PipelineSettings()
    search: SearchSettings = SearchSettings()
    forecast: ForecastSettings = ForecastSettings()
    evaluate: EvaluateSettings = EvaluateSettings()
    importance: ImportanceSettings = ImportanceSettings()
    paths: Paths = Paths()

    @property
    def seeds(self) -> Seeds:
        return derive_seeds(self.seed)

    def pipeline_config(self) -> PipelineConfig:
        s = self.seeds
        return PipelineConfig(
            narx=replace(self.narx, seed=s.narx),
            lstm=replace(self.lstm, seed=s.lstm),
            train_fraction=self.pipeline.train_fraction,
            lstm_warmup=self.pipeline.lstm_warmup,
        )

    def compare_config(self) -> CompareConfig:
        return CompareConfig(
            pipeline=self.pipeline_config(),
            budget=self.search.budget,
            seed=self.seeds.search,
            tune_rows=self.search.tune_rows,
            tune_val_fraction=self.search.tune_val_fraction,
            tune_epochs=self.search.tune_epochs,
            n_trees=self.search.n_trees,
        )

    def to_dict(self, include_paths=True):
        out = {"seed": self.seed}
        for name in _SECTIONS:
            if name == "paths" and not include_paths:
                continue
            d = asdict(getattr(self, name))
            for key in _DERIVED.get(name, ()):
                d.pop(key, None)
            out[name] = d
        return out

    def config_hash(self) -> str:
        """SHA-256 of the canonical JSON of every setting except file paths."""
        text = json.dumps(self.to_dict(include_paths=False), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode("utf-8")).hexdigest()


def _section(name, cls, values):
    if not isinstance(values, dict):
        raise ConfigError(f"section {name!r} must be an object")
    allowed = {f.name for f in fields(cls)} - _DERIVED.get(name, set())
    unknown = sorted(set(values) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {name}.{unknown[0]}")
    try:
        return cls(**values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid section {name!r}: {exc}") from None


def from_dict(doc) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    unknown = sorted(set(doc) - set(_SECTIONS) - {"seed"})
    if unknown:
        raise ConfigError(f"unknown key {unknown[0]}")
    kwargs = {}
    if "seed" in doc:
        if not isinstance(doc["seed"], int) or isinstance(doc["seed"], bool):
            raise ConfigError("seed must be an integer")
        kwargs["seed"] = doc["seed"]
    for name, cls in _SECTIONS.items():
        if name in doc:
            kwargs[name] = _section(name, cls, doc[name])
    return RunConfig(**kwargs)


def load_config(path) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: line {exc.lineno}: {exc.msg}") from None
    return from_dict(doc)
