"""Fully connected ReLU network trained with Adam and early stopping."""

from __future__ import annotations

import numpy as np


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class MLP:
    """Layers ``[n_in, *hidden, n_out]``; ReLU between, softmax or identity on top.

    Classification minimizes mean cross-entropy over softmax outputs,
    regression the mean squared error. ``weights[i]`` has shape
    ``(fan_in, fan_out)``.
    """

    def __init__(self, weights, biases, n_classes, loss_curve=None, val_curve=None,
                 epochs_run=0, best_epoch=0):
        self.weights = [np.asarray(w, dtype=float) for w in weights]
        self.biases = [np.asarray(b, dtype=float) for b in biases]
        self.n_classes = n_classes
        self.loss_curve = list(loss_curve or [])
        self.val_curve = list(val_curve or [])
        self.epochs_run = epochs_run
        self.best_epoch = best_epoch

    @classmethod
    def init(cls, sizes, n_classes, rng) -> "MLP":
        weights, biases = [], []
        for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
            weights.append(rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, fan_out)))
            biases.append(np.zeros(fan_out))
        return cls(weights, biases, n_classes)

    @property
    def params(self) -> list:
        return [p for wb in zip(self.weights, self.biases) for p in wb]

    def forward(self, X):
        acts = [X]
        h = X
        last = len(self.weights) - 1
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            z = h @ W + b
            h = z if i == last else np.maximum(z, 0.0)
            acts.append(h)
        return acts

    def _targets(self, y):
        if self.n_classes:
            return np.eye(self.n_classes)[np.asarray(y, dtype=int)]
        return np.asarray(y, dtype=float).reshape(-1, 1)

    def loss(self, X, y) -> float:
        out = self.forward(X)[-1]
        T = self._targets(y)
        if self.n_classes:
            z = out - out.max(axis=1, keepdims=True)
            logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
            return float(-np.mean(np.sum(T * logp, axis=1)))
        return float(np.mean((out - T) ** 2))

    def loss_and_grads(self, X, y):
        """Loss and gradients in ``params`` order (W0, b0, W1, b1, ...)."""
        acts = self.forward(X)
        out = acts[-1]
        T = self._targets(y)
        n = X.shape[0]
        if self.n_classes:
            P = _softmax(out)
            delta = (P - T) / n
            loss = float(-np.mean(np.sum(T * np.log(np.clip(P, 1e-300, None)), axis=1)))
        else:
            delta = 2.0 * (out - T) / n
            loss = float(np.mean((out - T) ** 2))
        grads = [None] * (2 * len(self.weights))
        for i in range(len(self.weights) - 1, -1, -1):
            grads[2 * i] = acts[i].T @ delta
            grads[2 * i + 1] = delta.sum(axis=0)
            if i:
                delta = (delta @ self.weights[i].T) * (acts[i] > 0)
        return loss, grads

    def _adam(self, X, y, lr, epochs, batch, patience, val_fraction, rng):
        n = X.shape[0]
        n_val = int(round(val_fraction * n)) if val_fraction > 0 else 0
        if n_val and n - n_val >= 1:
            perm = rng.permutation(n)
            val, tr = perm[:n_val], perm[n_val:]
        else:
            val, tr = np.array([], dtype=int), np.arange(n)
        params = self.params
        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        b1, b2, eps = 0.9, 0.999, 1e-8
        step = 0
        best = np.inf
        best_params = [p.copy() for p in params]
        best_epoch = 0
        since = 0
        losses, vals = [], []
        for ep in range(epochs):
            order = tr[rng.permutation(tr.size)]
            total = 0.0
            for s in range(0, order.size, batch):
                idx = order[s:s + batch]
                loss, grads = self.loss_and_grads(X[idx], y[idx])
                total += loss * idx.size
                step += 1
                for p, g, mi, vi in zip(params, grads, m, v):
                    mi *= b1
                    mi += (1 - b1) * g
                    vi *= b2
                    vi += (1 - b2) * g * g
                    p -= lr * (mi / (1 - b1 ** step)) / (np.sqrt(vi / (1 - b2 ** step)) + eps)
            losses.append(total / max(order.size, 1))
            monitor = self.loss(X[val], y[val]) if val.size else losses[-1]
            vals.append(monitor)
            if monitor < best - 1e-12:
                best, best_epoch, since = monitor, ep + 1, 0
                best_params = [p.copy() for p in params]
            else:
                since += 1
                if since >= patience:
                    break
        for p, bp in zip(params, best_params):
            p[...] = bp
        self.loss_curve += losses
        self.val_curve += vals
        self.epochs_run += len(losses)
        self.best_epoch = best_epoch
        return self

    @classmethod
    def fit(cls, spec, X, y, threads=1):
        p = spec.params
        rng = np.random.default_rng(spec.seed)
        n_out = spec.n_classes if spec.is_classifier else 1
        net = cls.init([X.shape[1], *p["hidden"], n_out], spec.n_classes, rng)
        return net._adam(X, y, p["lr"], p["epochs"], p["batch_size"], p["patience"], p["val_fraction"], rng)

    def fine_tune(self, spec, X, y, threads=1):
        p = spec.params
        rng = np.random.default_rng([spec.seed, 1])
        self.loss_curve, self.val_curve, self.epochs_run = [], [], 0
        val_fraction = p["val_fraction"] if X.shape[0] >= 10 else 0.0
        return self._adam(X, y, p["finetune_lr"], p["finetune_epochs"], p["batch_size"],
                          p["patience"], val_fraction, rng)

    def predict(self, X):
        out = self.forward(X)[-1]
        if self.n_classes:
            return np.argmax(out, axis=1)
        return out[:, 0]

    def training_meta(self):
        return {"epochs_run": self.epochs_run, "best_epoch": self.best_epoch,
                "loss_curve": [float(x) for x in self.loss_curve]}

    def to_dict(self):
        return {"weights": [w.tolist() for w in self.weights], "biases": [b.tolist() for b in self.biases],
                "n_classes": self.n_classes, "epochs_run": self.epochs_run, "best_epoch": self.best_epoch,
                "loss_curve": self.loss_curve, "val_curve": self.val_curve}

    @classmethod
    def from_dict(cls, d):
        return cls(d["weights"], d["biases"], d["n_classes"], d.get("loss_curve"), d.get("val_curve"),
                   d.get("epochs_run", 0), d.get("best_epoch", 0))
