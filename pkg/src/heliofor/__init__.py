"""heliofor: hybrid NARX-LSTM photovoltaic power forecasting."""

from ._accel import get_backend, set_backend, use_backend
from .core import FEATURES, NARX_COLUMN, TARGET, Dataset, DataError, MinMaxScaler
from .hybrid import HybridModel, PipelineConfig, predict_hybrid, predict_one_step, train_hybrid
from .lstm import LstmConfig
from .narx import NarxConfig
from .synth import PlantSpec, SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "FEATURES", "NARX_COLUMN", "TARGET", "Dataset", "DataError", "HybridModel", "LstmConfig",
    "MinMaxScaler", "NarxConfig", "PipelineConfig", "PlantSpec", "SynthConfig", "generate",
    "get_backend", "predict_hybrid", "predict_one_step", "set_backend", "train_hybrid", "use_backend",
]
