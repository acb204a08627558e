"""Metrics, cross-validation, hyperparameter search and baseline regressors."""

from .cv import CvReport, fold_blocks, kfold_cv
from .knn import KnnModel, knn_fit, knn_predict
from .metrics import Metrics, evaluate, improvement, mae, mape, rmse
from .search import Choice, IntRange, SearchFailed, SearchSpace, Trial, Uniform, randomized_search
from .trees import ExtraTreesModel, extratrees_fit, extratrees_predict

__all__ = [
    "Choice", "CvReport", "ExtraTreesModel", "IntRange", "KnnModel", "Metrics", "SearchFailed",
    "SearchSpace", "Trial", "Uniform", "evaluate", "extratrees_fit", "extratrees_predict",
    "fold_blocks", "improvement", "kfold_cv", "knn_fit", "knn_predict", "mae", "mape",
    "randomized_search", "rmse",
]
