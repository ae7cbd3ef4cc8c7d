"""Sliding windows, per-window statistics and endpoint labels."""

from __future__ import annotations

import csv
import io
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import NOMINAL_RATE_HZ, Condition, Demonstration, NeuralRecord, TaskRecord, condition_name
from .errors import ValidationError
from .preprocess import FilterSpec, preprocess

FEATURE_NAMES = ("slope", "intercept", "mean", "std", "skewness", "kurtosis")
N_STATS = len(FEATURE_NAMES)
DEGENERATE_STD = 1e-12
STALE_LABEL_S = 2.0


@dataclass(frozen=True)
class WindowSpec:
    length_s: float = 6.0
    stride_s: float = 1.0
    sample_rate: float = NOMINAL_RATE_HZ

    def __post_init__(self):
        if not self.length_s >= self.stride_s > 0:
            raise ValidationError(
                f"need length_s >= stride_s > 0, got {self.length_s}, {self.stride_s}"
            )
        if self.n_samples < 2:
            raise ValidationError(f"window of {self.n_samples} samples is too short")
        if self.stride_samples < 1:
            raise ValidationError("stride rounds to zero samples")

    @property
    def n_samples(self) -> int:
        return int(round(self.length_s * self.sample_rate))

    @property
    def stride_samples(self) -> int:
        return int(round(self.stride_s * self.sample_rate))


def window_bounds(n_total: int, length: int, stride: int) -> list:
    """(start, end) pairs, ``end`` inclusive, for windows of ``length`` samples."""
    if n_total < length:
        return []
    count = (n_total - length) // stride + 1
    return [(i * stride, i * stride + length - 1) for i in range(count)]


def sliding_windows(record: NeuralRecord, spec: WindowSpec) -> list:
    return window_bounds(record.n_samples, spec.n_samples, spec.stride_samples)


def window_features(window: np.ndarray) -> np.ndarray:
    """Six statistics per channel, channel-major.

    For each column: OLS slope and intercept against the sample index
    0..L-1, mean, population std, skewness (third standardized moment) and
    excess kurtosis. Skewness and kurtosis are 0 for flat channels.
    """
    x = np.asarray(window, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    L = x.shape[0]
    if L < 2:
        raise ValidationError(f"window needs at least 2 samples, got {L}")
    if not np.all(np.isfinite(x)):
        raise ValidationError("window contains non-finite values")

    t = np.arange(L, dtype=float)
    t_c = t - t.mean()
    mean = x.mean(axis=0)
    dev = x - mean
    slope = t_c @ dev / (t_c @ t_c)
    intercept = mean - slope * t.mean()
    m2 = np.mean(dev ** 2, axis=0)
    std = np.sqrt(m2)
    flat = std < DEGENERATE_STD
    safe = np.where(flat, 1.0, std)
    z = dev / safe
    skew = np.where(flat, 0.0, np.mean(z ** 3, axis=0))
    kurt = np.where(flat, 0.0, np.mean(z ** 4, axis=0) - 3.0)
    return np.stack([slope, intercept, mean, std, skew, kurt], axis=1).ravel()


@dataclass(frozen=True)
class FeatureWindow:
    features: np.ndarray
    endpoint_time: float
    binary_label: int
    class_label: int
    error_label: float
    subject_id: str
    condition: Condition
    episode_id: int


def _label_index(task: TaskRecord, t: float) -> int:
    """Index of the latest step with time <= t, or -1."""
    return int(np.searchsorted(task.times, t, side="right")) - 1


def _endpoint_step(task: TaskRecord, t: float, max_gap: float):
    i = _label_index(task, t)
    if i < 0 or t - task.times[i] > max_gap:
        return None
    return task.steps[i]


def attach_endpoint_label(features, endpoint_time: float, task: TaskRecord,
                          subject_id="", condition=None, max_gap=STALE_LABEL_S):
    """Label a window from the latest step at or before its endpoint.

    Returns ``None`` when no step lies within ``max_gap`` seconds before
    the endpoint (stale or missing label).
    """
    step = _endpoint_step(task, endpoint_time, max_gap)
    if step is None:
        return None
    return FeatureWindow(
        features=np.asarray(features, dtype=float),
        endpoint_time=float(endpoint_time),
        binary_label=step.binary_label,
        class_label=step.class_label,
        error_label=np.nan if step.error_label is None else step.error_label,
        subject_id=subject_id,
        condition=condition if condition is not None else (task.domain, task.interaction),
        episode_id=step.episode_id,
    )


@dataclass
class FeatureTable:
    """Column-oriented collection of labelled windows.

    ``group`` identifies the (subject, condition, session, episode) an
    endpoint belongs to; splits never separate windows of one group.
    """

    X: np.ndarray
    b: np.ndarray
    v: np.ndarray
    e: np.ndarray
    subject: np.ndarray
    condition: np.ndarray
    episode: np.ndarray
    group: np.ndarray
    time: np.ndarray
    dropped: Counter = field(default_factory=Counter)

    def __len__(self):
        return self.X.shape[0]

    @classmethod
    def empty(cls, n_features=48) -> "FeatureTable":
        z = np.zeros(0)
        return cls(np.zeros((0, n_features)), z.astype(int), z.astype(int), z,
                   np.array([], dtype=object), np.array([], dtype=object), z.astype(int),
                   np.array([], dtype=object), z)

    @classmethod
    def from_windows(cls, windows, session=0, dropped=None) -> "FeatureTable":
        if not windows:
            t = cls.empty()
            t.dropped = Counter(dropped or {})
            return t
        cond = np.array([condition_name(w.condition) for w in windows], dtype=object)
        subj = np.array([w.subject_id for w in windows], dtype=object)
        ep = np.array([w.episode_id for w in windows], dtype=int)
        group = np.array([f"{s}/{c}/{session}/{e}" for s, c, e in zip(subj, cond, ep)], dtype=object)
        return cls(
            X=np.vstack([w.features for w in windows]),
            b=np.array([w.binary_label for w in windows], dtype=int),
            v=np.array([w.class_label for w in windows], dtype=int),
            e=np.array([w.error_label for w in windows], dtype=float),
            subject=subj, condition=cond, episode=ep, group=group,
            time=np.array([w.endpoint_time for w in windows]),
            dropped=Counter(dropped or {}),
        )

    def take(self, idx) -> "FeatureTable":
        idx = np.asarray(idx, dtype=int)
        return FeatureTable(self.X[idx], self.b[idx], self.v[idx], self.e[idx], self.subject[idx],
                            self.condition[idx], self.episode[idx], self.group[idx], self.time[idx],
                            Counter(self.dropped))

    def labels(self, task: str) -> np.ndarray:
        if task == "binary":
            return self.b
        if task == "multiclass":
            return self.v
        if task == "regression":
            return self.e
        raise ValidationError(f"unknown task {task!r}")

    @staticmethod
    def concat(tables) -> "FeatureTable":
        tables = list(tables)
        if not tables:
            return FeatureTable.empty()
        dropped = Counter()
        for t in tables:
            dropped.update(t.dropped)
        return FeatureTable(
            np.vstack([t.X for t in tables]),
            *(np.concatenate([getattr(t, k) for t in tables])
              for k in ("b", "v", "e", "subject", "condition", "episode", "group", "time")),
            dropped=dropped,
        )

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"feat_{i}" for i in range(self.X.shape[1])]
                   + ["label_b", "label_v", "label_e", "subject", "episode"])
        for i in range(len(self)):
            e = "" if np.isnan(self.e[i]) else format(self.e[i], ".9g")
            w.writerow([format(v, ".9g") for v in self.X[i]]
                       + [self.b[i], self.v[i], e, self.subject[i], self.episode[i]])
        text = buf.getvalue()
        if path is not None:
            with open(Path(path), "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def featurize_record(record: NeuralRecord, task: TaskRecord, spec: WindowSpec,
                     subject_id="", session=0, max_gap=STALE_LABEL_S) -> FeatureTable:
    """Window an already-preprocessed record and attach endpoint labels.

    Windows are dropped (and counted by reason) when they start before the
    first task step, span an episode boundary, or have a stale endpoint label.
    """
    dropped = Counter()
    windows = []
    ts = record.timestamps
    for start, end in sliding_windows(record, spec):
        i0 = _label_index(task, ts[start])
        if i0 < 0:
            dropped["before_task"] += 1
            continue
        step = _endpoint_step(task, ts[end], max_gap)
        if step is None:
            dropped["stale_label"] += 1
            continue
        if task.steps[i0].episode_id != step.episode_id:
            dropped["episode_boundary"] += 1
            continue
        windows.append(attach_endpoint_label(
            window_features(record.samples[start:end + 1]), ts[end], task, subject_id,
            max_gap=max_gap))
    return FeatureTable.from_windows(windows, session=session, dropped=dropped)


def featurize_demonstration(demo: Demonstration, window: WindowSpec = WindowSpec(),
                            filt: FilterSpec = FilterSpec()) -> FeatureTable:
    """Calibrate, band-pass, window and label one demonstration."""
    clean = preprocess(demo.neural, demo.baseline, filt)
    return featurize_record(clean, demo.task, window, demo.subject_id, demo.session)
