"""Model specs, the feature scaler and the shared train/predict/fine-tune surface."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import SchemaError, ValidationError

MODEL_FORMAT = "neuroloop-model"
MODEL_FORMAT_VERSION = 1
KINDS = ("svm", "knn", "rf", "mlp")
TASKS = ("binary", "multiclass", "regression")
N_CLASSES = {"binary": 2, "multiclass": 3}
MIN_SAMPLES = 10

DEFAULT_PARAMS = {
    "svm": {"C": 1.0, "epochs": 200, "lr": 0.1, "batch_size": 32,
            "finetune_lr": 0.01, "finetune_epochs": 50},
    "knn": {"k": 5},
    "rf": {"n_trees": 100, "max_depth": 10, "min_samples_split": 2, "min_samples_leaf": 1,
           "max_features": "sqrt", "bootstrap": True},
    "mlp": {"hidden": [64, 32], "lr": 1e-3, "batch_size": 32, "epochs": 200, "patience": 20,
            "val_fraction": 0.1, "finetune_lr": 1e-4, "finetune_epochs": 50},
}


@dataclass(frozen=True)
class ModelSpec:
    kind: str
    task: str
    params: dict = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValidationError(f"unknown model kind {self.kind!r}; choose from {KINDS}")
        if self.task not in TASKS:
            raise ValidationError(f"unknown task {self.task!r}; choose from {TASKS}")
        if self.kind == "svm" and self.task == "regression":
            raise ValidationError("svm does not support regression")
        unknown = set(self.params) - set(DEFAULT_PARAMS[self.kind])
        if unknown:
            raise ValidationError(f"unknown {self.kind} hyperparameter(s): {sorted(unknown)}")
        object.__setattr__(self, "params", {**DEFAULT_PARAMS[self.kind], **self.params})

    @property
    def is_classifier(self) -> bool:
        return self.task != "regression"

    @property
    def n_classes(self) -> int:
        return N_CLASSES.get(self.task, 0)

    def to_dict(self) -> dict:
        return {"kind": self.kind, "task": self.task, "params": self.params, "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> "ModelSpec":
        return cls(d["kind"], d["task"], dict(d.get("params", {})), int(d.get("seed", 0)))


@dataclass(frozen=True)
class Scaler:
    """Per-feature z-scoring; zero-variance features keep unit scale."""

    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X) -> "Scaler":
        X = np.asarray(X, dtype=float)
        std = X.std(axis=0)
        return cls(X.mean(axis=0), np.where(std > 1e-12, std, 1.0))

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) / self.scale

    def to_dict(self):
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["mean"], dtype=float), np.asarray(d["scale"], dtype=float))


@dataclass(frozen=True)
class TrainedModel:
    spec: ModelSpec
    scaler: Scaler
    estimator: object
    meta: dict = field(default_factory=dict)

    @property
    def n_features(self) -> int:
        return self.scaler.mean.size


def _estimator_class(kind):
    # local imports keep base importable from the estimator modules
    from .forest import RandomForest
    from .knn import KNearest
    from .mlp import MLP
    from .svm import LinearSVM
    return {"svm": LinearSVM, "knn": KNearest, "rf": RandomForest, "mlp": MLP}[kind]


def _check_X(X, n_features=None) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValidationError(f"feature matrix must be 2-D, got shape {X.shape}")
    if n_features is not None and X.shape[1] != n_features:
        raise ValidationError(f"dimension mismatch: expected {n_features} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValidationError("features contain non-finite values")
    return X


def _check_y(spec: ModelSpec, y, n) -> np.ndarray:
    y = np.asarray(y)
    if y.shape != (n,):
        raise ValidationError(f"need {n} labels, got shape {y.shape}")
    if spec.is_classifier:
        if not np.all(np.isin(y, np.arange(spec.n_classes))):
            raise ValidationError(f"{spec.task} labels must lie in 0..{spec.n_classes - 1}")
        return y.astype(int)
    y = y.astype(float)
    if not np.all(np.isfinite(y)):
        raise ValidationError("regression targets contain non-finite values")
    return y


def train_model(spec: ModelSpec, X, y, threads=1) -> TrainedModel:
    """Fit the scaler on ``X`` and train the estimator named by ``spec.kind``."""
    X = _check_X(X)
    if X.shape[0] < MIN_SAMPLES:
        raise ValidationError(f"too few samples: {X.shape[0]} < {MIN_SAMPLES}")
    y = _check_y(spec, y, X.shape[0])
    if spec.is_classifier and np.unique(y).size < 2:
        raise ValidationError("single-class input: need at least 2 classes to train a classifier")
    scaler = Scaler.fit(X)
    est = _estimator_class(spec.kind).fit(spec, scaler.transform(X), y, threads=threads)
    return TrainedModel(spec, scaler, est, {"n_train": int(X.shape[0]), **est.training_meta()})


def predict(model: TrainedModel, X) -> np.ndarray:
    X = _check_X(X, model.n_features)
    return model.estimator.predict(model.scaler.transform(X))


def fine_tune(model: TrainedModel, X_target, y_target, threads=1) -> TrainedModel:
    """Update a copy of ``model`` with target data; the scaler is kept as is.

    Empty target data returns an unchanged copy.
    """
    X = np.asarray(X_target, dtype=float)
    if X.size == 0:
        return TrainedModel(model.spec, model.scaler, copy.deepcopy(model.estimator), dict(model.meta))
    X = _check_X(X, model.n_features)
    y = _check_y(model.spec, y_target, X.shape[0])
    est = copy.deepcopy(model.estimator).fine_tune(model.spec, model.scaler.transform(X), y, threads=threads)
    meta = {**model.meta, "n_finetune": int(X.shape[0]), "finetune": est.training_meta()}
    return TrainedModel(model.spec, model.scaler, est, meta)


def model_to_dict(model: TrainedModel) -> dict:
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_FORMAT_VERSION,
        "spec": model.spec.to_dict(),
        "scaler": model.scaler.to_dict(),
        "params": model.estimator.to_dict(),
        "meta": model.meta,
    }


def model_from_dict(d: dict) -> TrainedModel:
    if d.get("format") != MODEL_FORMAT:
        raise SchemaError(f"not a model file (format {d.get('format')!r})")
    if d.get("version") != MODEL_FORMAT_VERSION:
        raise SchemaError(f"model format version {d.get('version')!r} not supported "
                          f"(expected {MODEL_FORMAT_VERSION})")
    spec = ModelSpec.from_dict(d["spec"])
    est = _estimator_class(spec.kind).from_dict(d["params"])
    return TrainedModel(spec, Scaler.from_dict(d["scaler"]), est, dict(d.get("meta", {})))


def save_model(model: TrainedModel, path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model), sort_keys=True), encoding="utf-8")


def load_model(path) -> TrainedModel:
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ValidationError(f"missing file {path}") from None
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON ({exc})") from None
    return model_from_dict(d)

