"""CART trees and a bootstrap random forest.

Trees are stored as flat arrays (feature, threshold, children, leaf value)
so prediction is a vectorized walk. Split search at a node sorts all
candidate features at once and scores every threshold from cumulative
class counts (Gini) or cumulative sums (variance).
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

LEAF = -1


class Tree:
    def __init__(self, feature, threshold, left, right, value):
        self.feature = np.asarray(feature, dtype=int)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=int)
        self.right = np.asarray(right, dtype=int)
        self.value = np.asarray(value, dtype=float)  # nodes x outputs

    @property
    def n_nodes(self):
        return self.feature.size

    def apply(self, X) -> np.ndarray:
        node = np.zeros(X.shape[0], dtype=int)
        rows = np.arange(X.shape[0])
        while True:
            f = self.feature[node]
            inner = f != LEAF
            if not inner.any():
                return node
            r = rows[inner]
            n = node[inner]
            go_left = X[r, f[inner]] <= self.threshold[n]
            node[r] = np.where(go_left, self.left[n], self.right[n])

    def predict_value(self, X) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self):
        return {"feature": self.feature.tolist(), "threshold": self.threshold.tolist(),
                "left": self.left.tolist(), "right": self.right.tolist(), "value": self.value.tolist()}

    @classmethod
    def from_dict(cls, d):
        return cls(d["feature"], d["threshold"], d["left"], d["right"], d["value"])


def _best_split(X, y, Y1h, idx, feats, min_leaf, classifier):
    """Best (gain, feature, threshold) over ``feats`` for rows ``idx``, or None."""
    n = idx.size
    Xn = X[np.ix_(idx, feats)]  # n x m
    order = np.argsort(Xn, axis=0, kind="stable")
    xs = np.take_along_axis(Xn, order, axis=0)
    n_left = np.arange(1, n)[:, None]  # split after position i-1
    n_right = n - n_left
    valid = xs[1:] > xs[:-1]
    valid &= (n_left >= min_leaf) & (n_right >= min_leaf)
    if not valid.any():
        return None
    if classifier:
        C = Y1h[idx][order]  # n x m x classes
        cl = np.cumsum(C, axis=0)[:-1]
        tot = cl[-1] + C[-1]
        cr = tot[None] - cl
        gl = 1.0 - np.sum(cl ** 2, axis=2) / n_left ** 2
        gr = 1.0 - np.sum(cr ** 2, axis=2) / n_right ** 2
        parent = 1.0 - np.sum(tot ** 2, axis=1) / n ** 2
        child = (n_left * gl + n_right * gr) / n
    else:
        v = y[idx][order]  # n x m
        s = np.cumsum(v, axis=0)
        q = np.cumsum(v ** 2, axis=0)
        sl, ql = s[:-1], q[:-1]
        sr, qr = s[-1] - sl, q[-1] - ql
        sse = (ql - sl ** 2 / n_left) + (qr - sr ** 2 / n_right)
        parent = (q[-1] - s[-1] ** 2 / n) / n
        child = sse / n
    gain = np.where(valid, parent - child, -np.inf)
    pos, j = np.unravel_index(np.argmax(gain), gain.shape)
    if not gain[pos, j] > 1e-12:
        return None
    thr = 0.5 * (xs[pos, j] + xs[pos + 1, j])
    if not thr < xs[pos + 1, j]:  # midpoint rounded onto the upper value
        thr = xs[pos, j]
    return float(gain[pos, j]), int(feats[j]), float(thr)


def build_tree(X, y, rng, n_classes, max_depth=10, min_split=2, min_leaf=1, max_features=None) -> Tree:
    """Grow one CART tree (Gini when ``n_classes`` > 0, variance otherwise)."""
    classifier = n_classes > 0
    n_feat = X.shape[1]
    m = n_feat if max_features is None else max(1, min(n_feat, int(max_features)))
    Y1h = np.eye(n_classes)[y] if classifier else None

    feature, threshold, left, right, value = [], [], [], [], []

    def leaf_value(idx):
        if classifier:
            return np.bincount(y[idx], minlength=n_classes) / idx.size
        return np.array([y[idx].mean()])

    def new_node(idx):
        feature.append(LEAF)
        threshold.append(0.0)
        left.append(LEAF)
        right.append(LEAF)
        value.append(leaf_value(idx))
        return len(feature) - 1

    root = new_node(np.arange(X.shape[0]))
    stack = [(root, np.arange(X.shape[0]), 0)]
    while stack:
        node, idx, depth = stack.pop()
        if depth >= max_depth or idx.size < min_split:
            continue
        if classifier and np.all(y[idx] == y[idx[0]]):
            continue
        feats = np.sort(rng.choice(n_feat, size=m, replace=False))
        best = _best_split(X, y, Y1h, idx, feats, min_leaf, classifier)
        if best is None:
            continue
        _, f, thr = best
        mask = X[idx, f] <= thr
        li, ri = idx[mask], idx[~mask]
        a, b = new_node(li), new_node(ri)
        feature[node], threshold[node], left[node], right[node] = f, thr, a, b
        stack.append((b, ri, depth + 1))
        stack.append((a, li, depth + 1))
    return Tree(feature, threshold, left, right, np.vstack(value))


def _resolve_max_features(setting, n_feat):
    if setting in (None, "all"):
        return n_feat
    if setting == "sqrt":
        return max(1, int(math.isqrt(n_feat)))
    if isinstance(setting, float) and 0 < setting <= 1:
        return max(1, int(setting * n_feat))
    return int(setting)


class RandomForest:
    """Bootstrap forest; classification averages leaf class frequencies.

    Each tree draws from its own generator spawned from the model seed,
    so the forest is identical for any number of worker threads. The
    training rows are kept because fine-tuning refits on the pooled
    original and target data.
    """

    def __init__(self, trees, n_classes, X_train, y_train, refits=0):
        self.trees = list(trees)
        self.n_classes = n_classes
        self.X_train = np.asarray(X_train, dtype=float)
        self.y_train = np.asarray(y_train)
        self.refits = refits

    @staticmethod
    def _grow(spec, X, y, seed_seq, threads):
        p = spec.params
        n_classes = spec.n_classes
        m = _resolve_max_features(p["max_features"], X.shape[1])
        seeds = seed_seq.spawn(p["n_trees"])

        def one(ss):
            rng = np.random.default_rng(ss)
            rows = rng.integers(0, X.shape[0], size=X.shape[0]) if p["bootstrap"] else np.arange(X.shape[0])
            return build_tree(X[rows], y[rows], rng, n_classes, p["max_depth"],
                              p["min_samples_split"], p["min_samples_leaf"], m)

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                return list(pool.map(one, seeds))
        return [one(ss) for ss in seeds]

    @classmethod
    def fit(cls, spec, X, y, threads=1):
        trees = cls._grow(spec, X, y, np.random.SeedSequence(spec.seed), threads)
        return cls(trees, spec.n_classes, X, y)

    def fine_tune(self, spec, X, y, threads=1):
        Xp = np.vstack([self.X_train, X])
        yp = np.concatenate([self.y_train, y])
        self.refits += 1
        self.trees = self._grow(spec, Xp, yp, np.random.SeedSequence([spec.seed, self.refits]), threads)
        self.X_train, self.y_train = Xp, yp
        return self

    def predict_proba(self, X):
        return np.mean([t.predict_value(X) for t in self.trees], axis=0)

    def predict(self, X):
        out = self.predict_proba(X)
        if self.n_classes:
            return np.argmax(out, axis=1)
        return out[:, 0]

    def training_meta(self):
        return {"n_trees": len(self.trees), "mean_nodes": float(np.mean([t.n_nodes for t in self.trees]))}

    def to_dict(self):
        return {"trees": [t.to_dict() for t in self.trees], "n_classes": self.n_classes,
                "X_train": self.X_train.tolist(), "y_train": self.y_train.tolist(), "refits": self.refits}

    @classmethod
    def from_dict(cls, d):
        y = np.asarray(d["y_train"], dtype=int if d["n_classes"] else float)
        X = np.asarray(d["X_train"], dtype=float).reshape(len(y), -1)
        return cls([Tree.from_dict(t) for t in d["trees"]], d["n_classes"], X, y, d.get("refits", 0))
