import itertools

import numpy as np
import pytest

from neuroloop.data import DiscreteAction, NeuralRecord, TaskRecord, TransitionStep
from neuroloop.errors import ValidationError
from neuroloop.features import (
    FeatureTable,
    WindowSpec,
    attach_endpoint_label,
    featurize_demonstration,
    sliding_windows,
    window_bounds,
    window_features,
)

from conftest import make_demo


def _oracle(window):
    """Per-channel statistics from plain sums and the 2x2 normal equations."""
    L, M = window.shape
    out = []
    t = np.arange(L, dtype=float)
    A = np.array([[np.sum(t * t), np.sum(t)], [np.sum(t), L]])
    for m in range(M):
        x = window[:, m]
        slope, intercept = np.linalg.solve(A, [np.sum(t * x), np.sum(x)])
        mean = sum(x) / L
        m2 = sum((v - mean) ** 2 for v in x) / L
        m3 = sum((v - mean) ** 3 for v in x) / L
        m4 = sum((v - mean) ** 4 for v in x) / L
        out += [slope, intercept, mean, np.sqrt(m2), m3 / m2 ** 1.5, m4 / m2 ** 2 - 3.0]
    return np.array(out)


def test_window_count_example():
    b = window_bounds(52, 26, 5)
    assert len(b) == 6
    assert [e for _, e in b] == [25, 30, 35, 40, 45, 50]


def test_too_short_and_exact():
    assert window_bounds(20, 26, 5) == []
    assert window_bounds(26, 26, 7) == [(0, 25)]


def test_window_count_formula_exhaustive():
    for T, L, S in itertools.product(range(0, 201), range(1, 51), range(1, 21)):
        n = len(window_bounds(T, L, S))
        assert n == (0 if T < L else (T - L) // S + 1)


def test_default_spec_samples():
    spec = WindowSpec()
    assert spec.n_samples == 31 and spec.stride_samples == 5
    rec = NeuralRecord(np.arange(100) / 5.2, np.zeros((100, 8)))
    assert len(sliding_windows(rec, spec)) == (100 - 31) // 5 + 1


def test_constant_channel():
    assert window_features(np.full((10, 1), 3.0)).tolist() == [0.0, 3.0, 3.0, 0.0, 0.0, 0.0]


def test_ramp():
    f = window_features(2.0 * np.arange(10.0))
    assert abs(f[0] - 2.0) < 1e-9
    assert abs(f[1]) < 1e-9
    assert abs(f[2] - 9.0) < 1e-9
    assert abs(f[3] - np.sqrt(33.0)) < 1e-9
    assert abs(f[3] - 5.744563) < 1e-6


def test_symmetric_series_zero_skew():
    x = np.array([-3.0, -1.0, 0.0, 1.0, 3.0, 0.5, -0.5])
    assert abs(window_features(x)[4]) < 1e-12


def test_matches_oracle():
    rng = np.random.default_rng(0)
    for _ in range(200):
        L = int(rng.integers(3, 40))
        w = rng.normal(size=(L, 8)) * rng.uniform(0.1, 10) + rng.normal(size=8) * 5
        ours, ref = window_features(w), _oracle(w)
        assert np.allclose(ours, ref, rtol=1e-9, atol=1e-9)


def test_feature_layout_and_block_equivariance():
    rng = np.random.default_rng(1)
    w = rng.normal(size=(31, 8))
    f = window_features(w)
    assert f.shape == (48,)
    perm = rng.permutation(8)
    g = window_features(w[:, perm])
    assert np.allclose(g.reshape(8, 6), f.reshape(8, 6)[perm], rtol=1e-12, atol=1e-14)


def test_non_finite_window():
    with pytest.raises(ValidationError):
        window_features(np.array([1.0, np.nan, 2.0]))


def _task(times, labels):
    a = DiscreteAction([1.0, 0.0], 0)
    return TaskRecord(tuple(TransitionStep(t, 0, [0.0], a, 0.0, int(v > 0), v) for t, v in zip(times, labels)),
                      "lunar")


def test_endpoint_label_latest_prior():
    fw = attach_endpoint_label(np.zeros(48), 10.0, _task([9.8, 10.3], [1, 2]))
    assert fw.class_label == 1 and fw.binary_label == 1


def test_endpoint_exact_step_time():
    fw = attach_endpoint_label(np.zeros(48), 10.0, _task([9.0, 10.0], [0, 2]))
    assert fw.class_label == 2


def test_endpoint_stale_dropped():
    assert attach_endpoint_label(np.zeros(48), 10.0, _task([7.5, 10.3], [1, 1])) is None
    assert attach_endpoint_label(np.zeros(48), 5.0, _task([7.5], [1])) is None


def test_featurize_demonstration():
    demo = make_demo(n_steps=60)
    table = featurize_demonstration(demo)
    assert table.X.shape[1] == 48
    assert len(table) > 0
    assert set(np.unique(table.v)) <= {0, 1, 2}
    assert np.array_equal(table.b, (table.v > 0).astype(int))
    assert sum(table.dropped.values()) + len(table) == len(sliding_windows(demo.neural, WindowSpec()))


def test_table_take_and_concat():
    table = featurize_demonstration(make_demo(n_steps=60))
    half = table.take(np.arange(len(table) // 2))
    both = FeatureTable.concat([half, half])
    assert len(both) == 2 * len(half)
    assert np.array_equal(both.X[: len(half)], half.X)
    assert table.labels("binary").dtype.kind == "i"
    text = table.to_csv()
    assert text.splitlines()[0].split(",")[-5:] == ["label_b", "label_v", "label_e", "subject", "episode"]
    assert len(text.splitlines()) == len(table) + 1
