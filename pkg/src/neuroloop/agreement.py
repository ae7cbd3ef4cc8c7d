"""Multi-policy action agreement: continuous error labels, class labels, heatmaps."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .data import ContinuousAction, DiscreteAction, TaskRecord
from .errors import ValidationError

KL_EPS = 1e-8
SUBOPTIMAL = "suboptimal"
WORSTCASE = "worstcase"
MODES = (SUBOPTIMAL, WORSTCASE)
MODE_CLASS = {SUBOPTIMAL: 1, WORSTCASE: 2}


def _smooth(v: np.ndarray, eps: float) -> np.ndarray:
    return (v + eps) / (1.0 + v.size * eps)


def kl_error(a, pi, eps=KL_EPS) -> float:
    """KL(a || pi) in nats after pulling both vectors slightly into the simplex interior.

    Both arguments are renormalized first, then smoothed as
    ``(v + eps) / (1 + n eps)``. Entries where ``a`` is exactly zero add nothing.
    """
    a = np.asarray(a, dtype=float)
    pi = np.asarray(pi, dtype=float)
    if a.shape != pi.shape or a.ndim != 1:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {pi.shape}")
    for name, v in (("a", a), ("pi", pi)):
        if abs(v.sum() - 1.0) > 1e-6 or np.any(v < 0):
            raise ValidationError(f"{name} is not a probability vector (sum {v.sum()!r})")
    zero = a == 0
    a_s = _smooth(a / a.sum(), eps)
    pi_s = _smooth(pi / pi.sum(), eps)
    terms = np.where(zero, 0.0, a_s * np.log(a_s / pi_s))
    return max(float(terms.sum()), 0.0)


def euclid_error(a, pi_action) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(pi_action, dtype=float)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((b - a) ** 2)))


@dataclass(frozen=True)
class AgreementScore:
    errors: tuple
    mean: float


def mean_policy_error(action, ensemble, state) -> AgreementScore:
    """Score ``action`` against every member of ``ensemble`` at ``state``."""
    if len(ensemble) == 0:
        raise ValidationError("empty ensemble")
    if action.kind != ensemble.kind:
        raise ValidationError(f"action kind {action.kind} does not match ensemble kind {ensemble.kind}")
    outputs = ensemble.evaluate(state)
    if isinstance(action, DiscreteAction):
        errs = tuple(kl_error(action.distribution, p) for p in outputs)
    else:
        errs = tuple(euclid_error(action.values, p) for p in outputs)
    return AgreementScore(errs, float(np.mean(errs)))


def assign_class_labels(steps, t_star, mode=None) -> list:
    """Label steps before ``t_star`` optimal and the rest by degradation mode.

    ``t_star`` itself counts as failed. ``None`` means the episode never failed.
    """
    steps = list(steps)
    if t_star is None:
        return [s.with_labels(binary=0, cls=0) for s in steps]
    if not 0 <= t_star < len(steps):
        raise ValidationError(f"point of failure {t_star} outside [0, {len(steps)})")
    if mode not in MODE_CLASS:
        raise ValidationError(f"mode must be one of {MODES} when a point of failure is set")
    failed = MODE_CLASS[mode]
    return [
        s.with_labels(binary=0, cls=0) if i < t_star else s.with_labels(binary=1, cls=failed)
        for i, s in enumerate(steps)
    ]


@dataclass(frozen=True)
class HeatmapMatrix:
    """Episodes x timesteps of mean policy error; NaN marks padding."""

    values: np.ndarray
    episode_ids: tuple

    @property
    def present(self) -> np.ndarray:
        return ~np.isnan(self.values)

    def to_csv(self, path=None) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        for row in self.values:
            w.writerow(["" if np.isnan(v) else format(v, ".9g") for v in row])
        text = buf.getvalue()
        if path is not None:
            with open(Path(path), "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        return text


def export_agreement_heatmap(task: TaskRecord, ensemble=None, path=None) -> HeatmapMatrix:
    """Episode-by-step matrix of mean policy error, left aligned and NaN padded.

    Steps are scored with ``ensemble`` when given; otherwise their stored
    error labels are used.
    """
    if not task.steps:
        raise ValidationError("empty task")
    episodes = task.episodes()
    width = max(len(v) for v in episodes.values())
    values = np.full((len(episodes), width), np.nan)
    for r, (ep, steps) in enumerate(episodes.items()):
        for c, s in enumerate(steps):
            if ensemble is not None:
                values[r, c] = mean_policy_error(s.action, ensemble, s.state).mean
            elif s.error_label is None:
                raise ValidationError(f"step {c} of episode {ep} has no error label and no ensemble was given")
            else:
                values[r, c] = s.error_label
    hm = HeatmapMatrix(values, tuple(episodes))
    if path is not None:
        hm.to_csv(path)
    return hm
