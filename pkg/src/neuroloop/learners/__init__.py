"""From-scratch learners behind one train / predict / fine-tune interface."""

from .base import (
    DEFAULT_PARAMS,
    KINDS,
    MODEL_FORMAT_VERSION,
    TASKS,
    ModelSpec,
    Scaler,
    TrainedModel,
    fine_tune,
    load_model,
    model_from_dict,
    model_to_dict,
    predict,
    save_model,
    train_model,
)
from .forest import RandomForest, Tree, build_tree
from .knn import KNearest
from .mlp import MLP
from .svm import LinearSVM

__all__ = [
    "DEFAULT_PARAMS", "KINDS", "MODEL_FORMAT_VERSION", "TASKS", "ModelSpec", "Scaler", "TrainedModel",
    "fine_tune", "load_model", "model_from_dict", "model_to_dict", "predict", "save_model", "train_model",
    "RandomForest", "Tree", "build_tree", "KNearest", "MLP", "LinearSVM",
]
