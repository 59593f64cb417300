"""From-scratch two-layer LSTM load forecaster."""

from .archive import load_archive, save_archive
from .features import (CONTEXT_DIM, STEP_DIM, WINDOW, ContextSource, Dataset,
                       FeatureVector, build_dataset, context_vector)
from .forecast import ForecastEngine, ForecastResult, accuracy
from .model import LstmModel, TrainConfig
from .train import TrainHistory, train

__all__ = [
    "CONTEXT_DIM", "STEP_DIM", "WINDOW", "ContextSource", "Dataset",
    "FeatureVector", "ForecastEngine", "ForecastResult", "LstmModel",
    "TrainConfig", "TrainHistory", "accuracy", "build_dataset",
    "context_vector", "load_archive", "save_archive", "train",
]
