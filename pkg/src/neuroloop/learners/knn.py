"""K nearest neighbours on z-scored features."""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError

# query rows per distance block, sized so a block holds about 4M differences
BLOCK_ELEMS = 4_000_000


class KNearest:
    """Euclidean neighbours; equal distances resolve to the lower training index.

    Classification takes the majority vote among the ``k`` neighbours. A
    vote tie goes to the tied class whose closest member ranks first.
    Regression averages the neighbours' targets.
    """

    def __init__(self, X, y, k, classifier, n_classes):
        self.X = np.asarray(X, dtype=float)
        self.y = np.asarray(y)
        self.k = int(k)
        self.classifier = classifier
        self.n_classes = n_classes

    @classmethod
    def fit(cls, spec, X, y, threads=1):
        if spec.params["k"] < 1:
            raise ValidationError("k must be >= 1")
        return cls(X.copy(), y.copy(), spec.params["k"], spec.is_classifier, spec.n_classes)

    def fine_tune(self, spec, X, y, threads=1):
        self.X = np.vstack([self.X, X])
        self.y = np.concatenate([self.y, y])
        return self

    def neighbours(self, Q) -> np.ndarray:
        """Indices of the ``k`` nearest training rows for every query, nearest first."""
        k = min(self.k, self.X.shape[0])
        out = np.empty((Q.shape[0], k), dtype=int)
        step = max(1, BLOCK_ELEMS // max(1, self.X.size))
        for s in range(0, Q.shape[0], step):
            # direct differences rather than the |q|^2 - 2qx + |x|^2 expansion,
            # so exact ties stay exact
            diff = Q[s:s + step, None, :] - self.X[None, :, :]
            d = np.einsum("qnf,qnf->qn", diff, diff)
            out[s:s + step] = np.argsort(d, axis=1, kind="stable")[:, :k]
        return out

    def predict(self, X):
        nb = self.neighbours(X)
        labels = self.y[nb]
        if not self.classifier:
            return labels.mean(axis=1)
        k = nb.shape[1]
        votes = np.zeros((X.shape[0], self.n_classes))
        first = np.full((X.shape[0], self.n_classes), k)
        rows = np.arange(X.shape[0])
        for r in range(k - 1, -1, -1):
            c = labels[:, r].astype(int)
            votes[rows, c] += 1
            first[rows, c] = r
        # more votes first, then the earliest-ranked member
        score = votes * (k + 1) - first
        return np.argmax(score, axis=1)

    def training_meta(self):
        return {"n_reference": int(self.X.shape[0])}

    def to_dict(self):
        return {"X": self.X.tolist(), "y": self.y.tolist(), "k": self.k,
                "classifier": self.classifier, "n_classes": self.n_classes}

    @classmethod
    def from_dict(cls, d):
        X = np.asarray(d["X"], dtype=float)
        y = np.asarray(d["y"], dtype=int if d["classifier"] else float)
        return cls(X.reshape(len(y), -1), y, d["k"], d["classifier"], d["n_classes"])
