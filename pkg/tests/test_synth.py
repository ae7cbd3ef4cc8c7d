import filecmp

import numpy as np
import pytest

from neuroloop.data import ContinuousAction, TaskRecord, TransitionStep, load_dataset
from neuroloop.errors import ValidationError
from neuroloop.evaluation import ParadigmSpec, build_tables, run_paradigm
from neuroloop.learners import ModelSpec
from neuroloop.synth import (
    RESPONSE_TEMPLATE,
    SubjectProfile,
    SynthSpec,
    draw_profile,
    generate_cohort,
    generate_synthetic_subject,
    hrf_kernel,
    label_drive,
    synthesize,
)

RATE = 5.2


def _block_task(blocks, t0=25.0):
    """One step per second; ``blocks`` is a list of (class label, seconds)."""
    steps, t = [], t0
    a = ContinuousAction([0.0, 0.0, 0.0])
    for v, secs in blocks:
        for _ in range(secs):
            steps.append(TransitionStep(t, 0, [0.0], a, 0.0, int(v > 0), v, 0.0))
            t += 1.0
    return TaskRecord(tuple(steps), "robot")


def test_kernel_unit_sum_and_peak():
    for lat in (5.0, 6.0, 7.0):
        h = hrf_kernel(lat)
        assert abs(h.sum() - 1.0) < 1e-12
        assert abs(np.argmax(h) / RATE - lat) < 0.5


def test_profile_latency_bounds():
    p = draw_profile(np.random.default_rng(0))
    with pytest.raises(ValidationError):
        SubjectProfile(p.gains, p.offsets, 8.0, p.amplitudes, p.noise_std, p.drift_amp, p.drift_period_s)


def test_profile_jitter_keeps_worstcase_floor():
    for s in range(20):
        p = draw_profile(np.random.default_rng(s), pattern_jitter=2.0)
        assert np.all(p.amplitudes[2, :4] >= 1.0)
        assert np.all(p.amplitudes[0] == 0.0)
    flat = draw_profile(np.random.default_rng(0), pattern_jitter=0.0)
    assert np.array_equal(flat.amplitudes, RESPONSE_TEMPLATE)


def test_label_drive_rest_between_steps():
    task = _block_task([(2, 3)], t0=30.0)
    drive = label_drive(task, np.array([29.0, 30.0, 32.5, 33.9, 34.1]))
    assert drive.tolist() == [0, 2, 2, 2, 0]


def test_noise_free_separation():
    task = _block_task([(0, 40), (2, 40), (0, 10)])
    for seed in range(10):
        prof = draw_profile(np.random.default_rng(seed), snr=float("inf"), drift_ratio=0.0)
        demo = generate_synthetic_subject(prof, task, seed)
        t, x = demo.neural.timestamps, demo.neural.samples
        rest = x[np.argmin(np.abs(t - 64.0))]
        active = x[np.argmin(np.abs(t - 104.0))]
        oxy = slice(0, 4)
        assert np.all(active[oxy] - rest[oxy] >= 0.5 * 1.0)


def test_same_seed_identical():
    spec = SynthSpec(n_subjects=2, episodes=5, seed=3)
    a = [d for d, _ in synthesize(spec)]
    b = [d for d, _ in synthesize(spec)]
    assert a == b
    c = [d for d, _ in synthesize(SynthSpec(n_subjects=2, episodes=5, seed=4))]
    assert a != c


def test_zero_subjects():
    with pytest.raises(ValidationError):
        SynthSpec(n_subjects=0)


def test_cohort_on_disk(tmp_path):
    spec = SynthSpec(n_subjects=5, episodes=4, seed=1)
    m = generate_cohort(spec, tmp_path / "a")
    generate_cohort(spec, tmp_path / "b")
    assert m.subjects == ["S01", "S02", "S03", "S04", "S05"]
    assert len(list((tmp_path / "a" / "subjects").iterdir())) == 5
    cmp = filecmp.dircmp(tmp_path / "a", tmp_path / "b")
    assert not cmp.diff_files and not cmp.left_only and not cmp.right_only
    for sub in ("S01", "S05"):
        d = filecmp.dircmp(tmp_path / "a" / "subjects" / sub / "robot-passive-0",
                           tmp_path / "b" / "subjects" / sub / "robot-passive-0")
        assert not d.diff_files
    # what was written loads back exactly as generated in memory
    assert load_dataset(tmp_path / "a") == [d for d, _ in synthesize(spec)]


def test_multiple_conditions():
    spec = SynthSpec(n_subjects=1, episodes=3, conditions=(("lunar", "active"), ("flappy", "passive")), seed=2)
    demos = [d for d, _ in synthesize(spec)]
    assert [d.condition for d in demos] == [("lunar", "active"), ("flappy", "passive")]


def test_latency_visible_in_cross_correlation():
    for seed in range(3):
        (demo, prof), = synthesize(SynthSpec(n_subjects=1, episodes=40, seed=seed))
        t = np.concatenate([demo.baseline.timestamps, demo.neural.timestamps])
        x = np.vstack([demo.baseline.samples, demo.neural.samples])
        v = label_drive(demo.task, t).astype(float)
        amp = prof.amplitudes[2] * prof.gains
        m = int(np.argmax(np.abs(amp)))
        d, y = v - v.mean(), np.sign(amp[m]) * (x[:, m] - x[:, m].mean())
        lags = np.arange(int(15 * RATE))
        cc = [np.dot(d[: d.size - L], y[L:]) for L in lags]
        assert 4.0 <= lags[int(np.argmax(cc))] / RATE <= 8.0


def test_zero_amplitude_is_chance():
    demos = [d for d, _ in synthesize(SynthSpec(n_subjects=5, episodes=30, amplitude=0.0, seed=11))]
    rows, _ = run_paradigm(build_tables(demos), ParadigmSpec("single_subject"), ModelSpec("knn", "binary"),
                           ("binary",), (0, 1))
    mean = np.mean([r["f1_summary"]["mean"] for r in rows])
    assert abs(mean - 0.5) <= 0.08
