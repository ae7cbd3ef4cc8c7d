"""Seeded synthetic cohorts with a planted signal-to-label relationship.

Each channel is ``offset + gain * (class response convolved with a
double-gamma kernel) + drift + noise``. The response is driven by the
per-step class label V, so the labels a classifier sees are recoverable
from the signal up to the hemodynamic lag and the subject's channel gains.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import gamma

from .data import (
    CHANNEL_NAMES,
    N_CANONICAL_CHANNELS,
    ContinuousAction,
    DiscreteAction,
    TransitionStep,
    NOMINAL_RATE_HZ,
    DatasetManifest,
    Demonstration,
    ManifestEntry,
    NeuralRecord,
    TaskRecord,
    condition_name,
    quantize,
    save_demonstration,
    save_manifest,
)
from .domains import make_domain
from .errors import ValidationError
from .trajectory import build_ensemble, simulate_task

log = logging.getLogger(__name__)

BASELINE_S = 20.0
KERNEL_S = 32.0

# Class response pattern across the 8 canonical channels (oxy x4, deoxy x4).
# Sub-optimal raises oxy and lowers deoxy; worst case raises both.
RESPONSE_TEMPLATE = np.array([
    [0.0] * 8,
    [1.0, 1.0, 1.0, 1.0, -0.4, -0.4, -0.4, -0.4],
    [2.0, 2.0, 2.0, 2.0, 0.8, 0.8, 0.8, 0.8],
])


@dataclass(frozen=True)
class SubjectProfile:
    gains: np.ndarray
    offsets: np.ndarray
    latency_s: float
    amplitudes: np.ndarray  # 3 x M, row per class
    noise_std: float
    drift_amp: float
    drift_period_s: np.ndarray

    def __post_init__(self):
        if not 5.0 <= self.latency_s <= 7.0:
            raise ValidationError(f"latency {self.latency_s} outside [5, 7] s")
        if self.noise_std < 0:
            raise ValidationError("noise std must be >= 0")
        if np.shape(self.amplitudes)[0] != 3:
            raise ValidationError("need one amplitude row per class (3)")

    @property
    def n_channels(self) -> int:
        return len(self.gains)


def draw_profile(rng, amplitude=1.0, snr=2.0, gain_range=(0.5, 1.5), drift_ratio=0.25,
                 pattern_jitter=1.0, n_channels=N_CANONICAL_CHANNELS) -> SubjectProfile:
    """Random subject: channel gains, offsets, latency and drift; noise set by ``snr``.

    ``pattern_jitter`` perturbs the failure-class rows of the response
    template per channel (additive, in units of ``amplitude``), so each
    subject has its own spatial pattern. The worst-case response on oxy
    channels is kept at or above the planted amplitude.
    """
    template = RESPONSE_TEMPLATE[:, :n_channels].copy()
    template[1:] += pattern_jitter * rng.normal(size=template[1:].shape)
    oxy = np.array([name.startswith("oxy") for name in CHANNEL_NAMES[:n_channels]])
    template[2, oxy] = np.maximum(template[2, oxy], 1.0)
    return SubjectProfile(
        gains=rng.uniform(*gain_range, size=n_channels),
        offsets=rng.normal(0.0, 5.0, size=n_channels),
        latency_s=float(rng.uniform(5.0, 7.0)),
        amplitudes=amplitude * template,
        noise_std=0.0 if snr == float("inf") else amplitude / snr,
        drift_amp=drift_ratio * amplitude,
        drift_period_s=rng.uniform(60.0, 180.0, size=n_channels),
    )


def hrf_kernel(latency_s: float, rate=NOMINAL_RATE_HZ, length_s=KERNEL_S) -> np.ndarray:
    """Double-gamma response (peak near ``latency_s``, undershoot 1/6), unit sum."""
    t = np.arange(0.0, length_s, 1.0 / rate)
    h = gamma.pdf(t, latency_s + 1.0) - gamma.pdf(t, latency_s + 11.0) / 6.0
    return h / h.sum()


def label_drive(task: TaskRecord, times: np.ndarray, hold_s=2.0) -> np.ndarray:
    """Class label in force at each time.

    That is the label of the latest step at or before the time, provided it
    is at most ``hold_s`` old; otherwise (before the task, between episodes)
    the subject is at rest and the drive is class 0.
    """
    idx = np.searchsorted(task.times, times, side="right") - 1
    safe = np.clip(idx, 0, None)
    live = (idx >= 0) & (times - task.times[safe] <= hold_s)
    return np.where(live, task.class_labels[safe], 0)


def generate_synthetic_subject(profile: SubjectProfile, task: TaskRecord, seed, subject_id="S00",
                               session=0, rate=NOMINAL_RATE_HZ, baseline_s=BASELINE_S) -> Demonstration:
    """Neural signal for ``task`` with a ``baseline_s`` rest segment in front.

    The task's first step must start at or after ``baseline_s``; times are
    on a regular grid of period ``1/rate`` from 0.
    """
    if not task.steps:
        raise ValidationError("empty task")
    t_start, t_end = task.time_range
    if t_start < baseline_s:
        raise ValidationError(f"task starts at {t_start} s, inside the {baseline_s} s baseline")
    rng = np.random.default_rng(seed)
    n_base = int(round(baseline_s * rate))
    n_total = int(np.floor(t_end * rate)) + 2
    times = np.arange(n_total) / rate

    drive = profile.amplitudes[label_drive(task, times)]  # n_total x M
    drive[:n_base] = 0.0
    kernel = hrf_kernel(profile.latency_s, rate)
    response = np.stack(
        [np.convolve(drive[:, m], kernel)[:n_total] for m in range(profile.n_channels)], axis=1
    )
    phase = rng.uniform(0, 2 * np.pi, size=profile.n_channels)
    drift = profile.drift_amp * np.sin(2 * np.pi * times[:, None] / profile.drift_period_s + phase)
    noise = rng.normal(0.0, profile.noise_std, size=(n_total, profile.n_channels))
    x = quantize(profile.offsets + profile.gains * response + drift + noise)
    ts = quantize(times)
    baseline = NeuralRecord(ts[:n_base], x[:n_base])
    neural = NeuralRecord(ts[n_base:], x[n_base:])
    return Demonstration(subject_id, baseline, neural, task, session)


@dataclass(frozen=True)
class SynthSpec:
    n_subjects: int = 5
    episodes: int = 80
    conditions: tuple = (("robot", "passive"),)
    snr: float = 2.0
    amplitude: float = 1.0
    p_fail: float = 0.03
    modes: str = "mixed"
    noise_sigma: float = 0.5
    k_policies: int = 10
    horizon: int | None = None
    rest_s: float = 25.0
    pattern_jitter: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n_subjects < 1:
            raise ValidationError("n_subjects must be >= 1")
        if self.episodes < 1:
            raise ValidationError("episodes must be >= 1")
        object.__setattr__(self, "conditions", tuple(tuple(c) for c in self.conditions))


def subject_ids(n: int) -> list:
    return [f"S{i + 1:02d}" for i in range(n)]


def _quantize_task(task: TaskRecord) -> TaskRecord:
    # match what a save/load round trip would produce
    steps = []
    for s in task.steps:
        if isinstance(s.action, DiscreteAction):
            action = DiscreteAction(quantize(s.action.probs), s.action.chosen)
        else:
            action = ContinuousAction(quantize(s.action.values))
        steps.append(TransitionStep(
            quantize(s.time), s.episode_id, quantize(s.state), action, quantize(s.reward),
            s.binary_label, s.class_label, None if s.error_label is None else quantize(s.error_label),
        ))
    return TaskRecord(tuple(steps), task.domain, task.interaction)


def synthesize(spec: SynthSpec, profile_overrides=None) -> list:
    """Generate the cohort in memory. Returns ``[(demo, profile), ...]``.

    ``profile_overrides`` maps subject id to keyword overrides for
    :func:`draw_profile`.
    """
    root = np.random.SeedSequence(spec.seed)
    cond_seeds = root.spawn(len(spec.conditions) + 1)
    subject_seeds = cond_seeds.pop().spawn(spec.n_subjects)
    ensembles = {}
    for cond, ss in zip(spec.conditions, cond_seeds):
        kw = {} if spec.horizon is None else {"horizon": spec.horizon}
        dom = make_domain(cond[0], **kw)
        ensembles[cond] = (dom, build_ensemble(dom, spec.k_policies, rng=np.random.default_rng(ss)))

    overrides = profile_overrides or {}
    out = []
    for sid, ss in zip(subject_ids(spec.n_subjects), subject_seeds):
        prof_seed, *cond_task_seeds = ss.spawn(1 + len(spec.conditions))
        kw = {"amplitude": spec.amplitude, "snr": spec.snr, "pattern_jitter": spec.pattern_jitter,
              **overrides.get(sid, {})}
        profile = draw_profile(np.random.default_rng(prof_seed), **kw)
        for cond, cs in zip(spec.conditions, cond_task_seeds):
            task_seed, signal_seed = cs.spawn(2)
            dom, ens = ensembles[cond]
            task, _ = simulate_task(dom, ens, spec.episodes, np.random.default_rng(task_seed),
                                    p_fail=spec.p_fail, modes=spec.modes, noise_sigma=spec.noise_sigma,
                                    interaction=cond[1], t0=BASELINE_S, gap_s=spec.rest_s)
            task = _quantize_task(task)
            demo = generate_synthetic_subject(profile, task, signal_seed, subject_id=sid)
            out.append((demo, profile))
    return out


def generate_cohort(spec: SynthSpec, out_dir, profile_overrides=None) -> DatasetManifest:
    """Write every synthetic demonstration plus ``manifest.json`` under ``out_dir``."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for demo, _ in synthesize(spec, profile_overrides):
        rel = Path("subjects") / demo.subject_id / f"{condition_name(demo.condition)}-{demo.session}"
        save_demonstration(demo, out_dir / rel)
        entries.append(ManifestEntry(demo.subject_id, demo.task.domain, demo.task.interaction,
                                     demo.session, rel.as_posix()))
        log.info("wrote %s", rel.as_posix())
    manifest = DatasetManifest(tuple(entries))
    save_manifest(manifest, out_dir)
    return manifest
