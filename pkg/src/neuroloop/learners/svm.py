"""Linear SVM: hinge loss with L2 penalty, minibatch subgradient descent, one-vs-rest."""

from __future__ import annotations

import numpy as np


class LinearSVM:
    """One ``(w, b)`` row per class; binary tasks use the single +1 = class 1 machine.

    Minimizes ``||w||^2 / (2 C n) + mean(hinge)`` per machine. The step
    size decays as ``lr / (1 + epoch)``.
    """

    def __init__(self, W, b, classes, n_classes, epochs_run=0):
        self.W = np.asarray(W, dtype=float)
        self.b = np.asarray(b, dtype=float)
        self.classes = np.asarray(classes, dtype=int)  # class of each machine
        self.n_classes = n_classes
        self.epochs_run = epochs_run

    @staticmethod
    def _targets(y, classes):
        return np.where(y[:, None] == classes[None, :], 1.0, -1.0)

    def _sgd(self, X, y, lr0, epochs, C, batch, rng, n_ref):
        T = self._targets(y, self.classes)
        lam = 1.0 / (C * n_ref)
        n = X.shape[0]
        for ep in range(epochs):
            lr = lr0 / (1.0 + ep)
            order = rng.permutation(n)
            for start in range(0, n, batch):
                idx = order[start:start + batch]
                Xb, Tb = X[idx], T[idx]
                margin = Tb * (Xb @ self.W.T + self.b)
                viol = (margin < 1.0) * Tb  # m x machines
                gW = lam * self.W - viol.T @ Xb / len(idx)
                gb = -viol.sum(axis=0) / len(idx)
                self.W -= lr * gW
                self.b -= lr * gb
        self.epochs_run += epochs

    @classmethod
    def fit(cls, spec, X, y, threads=1):
        p = spec.params
        classes = np.array([1]) if spec.n_classes == 2 else np.arange(spec.n_classes)
        model = cls(np.zeros((classes.size, X.shape[1])), np.zeros(classes.size), classes, spec.n_classes)
        rng = np.random.default_rng(spec.seed)
        model._sgd(X, y, p["lr"], p["epochs"], p["C"], p["batch_size"], rng, X.shape[0])
        return model

    def fine_tune(self, spec, X, y, threads=1):
        p = spec.params
        rng = np.random.default_rng([spec.seed, 1])
        self._sgd(X, y, p["finetune_lr"], p["finetune_epochs"], p["C"], p["batch_size"], rng, X.shape[0])
        return self

    def decision_function(self, X):
        return X @ self.W.T + self.b

    def predict(self, X):
        s = self.decision_function(X)
        if self.n_classes == 2:
            return (s[:, 0] > 0).astype(int)
        return np.argmax(s, axis=1)

    def training_meta(self):
        return {"epochs_run": self.epochs_run}

    def to_dict(self):
        return {"W": self.W.tolist(), "b": self.b.tolist(), "classes": self.classes.tolist(),
                "n_classes": self.n_classes, "epochs_run": self.epochs_run}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["W"], dtype=float).reshape(len(d["classes"]), -1), d["b"], d["classes"],
                   d["n_classes"], d.get("epochs_run", 0))
