import json
from collections import Counter
from itertools import combinations

import numpy as np
import pytest

from neuroloop.errors import InsufficientDataError, ValidationError
from neuroloop.evaluation import (
    ParadigmSpec,
    balance_table,
    build_tables,
    calibration_split,
    confusion_matrix,
    downsample_majority,
    f1_macro,
    lopo_partition,
    regression_metrics,
    run_evaluation,
    run_paradigm,
    split_dataset,
)
from neuroloop.learners import ModelSpec

KNN = ModelSpec("knn", "binary")


def test_downsample_two_classes():
    labels = np.array([0] * 100 + [1] * 40)
    idx = downsample_majority(labels, 0)
    assert Counter(labels[idx].tolist()) == {0: 40, 1: 40}
    assert np.array_equal(idx, downsample_majority(labels, 0))


def test_downsample_three_classes_and_identity():
    labels = np.array([0] * 50 + [1] * 30 + [2] * 10)
    assert Counter(labels[downsample_majority(labels, 3)].tolist()) == {0: 10, 1: 10, 2: 10}
    balanced = np.array([0, 1, 2] * 7)
    assert np.array_equal(downsample_majority(balanced, 1), np.arange(21))


def test_downsample_single_class():
    with pytest.raises(ValidationError):
        downsample_majority(np.zeros(5), 0)


def test_split_equal_episodes():
    groups = np.repeat(np.arange(10), 7)
    plan = split_dataset(groups, seed=0)
    assert [len(plan.groups[k]) for k in ("train", "validation", "test")] == [6, 2, 2]
    assert plan.counts() == {"train": 42, "validation": 14, "test": 14}
    assert not plan.flags


def test_split_giant_episode():
    groups = np.array([0] * 100 + [1] * 5 + [2] * 5 + [3] * 5 + [4] * 5)
    plan = split_dataset(groups, seed=1)
    assert 0 in plan.groups["train"]
    assert plan.flags


def test_split_deterministic_and_disjoint():
    rng = np.random.default_rng(0)
    groups = np.repeat(np.arange(30), rng.integers(3, 12, size=30))
    a, b = split_dataset(groups, seed=5), split_dataset(groups, seed=5)
    assert a.groups == b.groups
    sets = [set(groups[getattr(a, k)]) for k in ("train", "validation", "test")]
    assert not (sets[0] & sets[1] or sets[0] & sets[2] or sets[1] & sets[2])
    assert sum(a.counts().values()) == groups.size


def test_split_repairs_missing_class():
    groups = np.repeat(np.arange(12), 5)
    labels = np.zeros(60, dtype=int)
    labels[groups >= 9] = 1
    plan = split_dataset(groups, labels, seed=0)
    for k in ("train", "validation", "test"):
        assert set(labels[getattr(plan, k)]) == {0, 1}


def test_split_needs_three_groups():
    with pytest.raises(ValidationError):
        split_dataset(np.array([0, 0, 1, 1]))


def test_lopo():
    assert lopo_partition(["A", "B", "C"]) == [(("B", "C"), ("A",)), (("A", "C"), ("B",)), (("A", "B"), ("C",))]
    folds = lopo_partition(list("ABCDE"), holdout=2)
    assert len(folds) == 10
    assert {f[1] for f in folds} == set(combinations("ABCDE", 2))
    capped = lopo_partition(list("ABCDE"), holdout=2, max_folds=3, seed=1)
    assert len(capped) == 3
    assert set().union(*(set(f[1]) for f in capped)) == set("ABCDE")
    with pytest.raises(ValidationError):
        lopo_partition(["A", "B"])


def _f1_oracle(y, p):
    classes = sorted(set(y) | set(p))
    cm = {(a, b): 0 for a in classes for b in classes}
    for a, b in zip(y, p):
        cm[(a, b)] += 1
    scores = []
    for c in classes:
        tp = cm[(c, c)]
        fp = sum(cm[(o, c)] for o in classes if o != c)
        fn = sum(cm[(c, o)] for o in classes if o != c)
        prec = tp / (tp + fp) if tp + fp else 0.0
        rec = tp / (tp + fn) if tp + fn else 0.0
        scores.append(2 * prec * rec / (prec + rec) if prec + rec else 0.0)
    return sum(scores) / len(scores)


def test_f1_examples():
    assert f1_macro([0, 1, 1, 0], [0, 1, 1, 0]) == 1.0
    assert f1_macro([0, 0, 1, 1], [0, 1, 1, 1]) == pytest.approx((2 / 3 + 0.8) / 2, abs=1e-12)
    assert round(f1_macro([0, 0, 1, 1], [0, 1, 1, 1]), 4) == 0.7333
    assert f1_macro([0, 1, 0, 1], [1, 0, 1, 0]) == 0.0


def test_f1_matches_oracle():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 30))
        k = int(rng.integers(2, 4))
        y, p = rng.integers(0, k, size=n), rng.integers(0, k, size=n)
        assert abs(f1_macro(y, p) - _f1_oracle(y.tolist(), p.tolist())) <= 1e-12


def test_confusion_matrix():
    assert confusion_matrix([0, 1, 2, 2], [0, 2, 2, 1], 3).tolist() == [[1, 0, 0], [0, 0, 1], [0, 1, 1]]


def test_regression_metrics():
    assert regression_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 3.0]) == (0.0, 1.0)
    assert regression_metrics([1.0, 2.0, 3.0], [2.0, 2.0, 2.0])[1] == pytest.approx(0.0)
    mse, r2 = regression_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 4.0])
    assert mse == pytest.approx(1 / 3) and r2 == pytest.approx(0.5)
    assert regression_metrics([2.0, 2.0], [1.0, 3.0]) == (1.0, None)


def test_balance_table(small_tables):
    t = next(iter(small_tables.values()))
    for task in ("binary", "multiclass", "regression"):
        bal = balance_table(t, task, 0)
        counts = Counter((bal.v if task == "regression" else bal.labels(task)).tolist())
        assert len(set(counts.values())) == 1
    shuffled = balance_table(t, "binary", 0, shuffle=True)
    assert len(shuffled) > 0


def test_calibration_split(small_tables):
    t = balance_table(next(iter(small_tables.values())), "binary", 0)
    cal, rest = calibration_split(t, 0.2, 0)
    assert cal.size >= 0.2 * len(t)
    assert not set(t.group[cal]) & set(t.group[rest])
    assert calibration_split(t, 0.0, 0)[0].size == 0


def test_single_subject_rows_deterministic(small_tables):
    par = ParadigmSpec("single_subject")
    rows, _ = run_paradigm(small_tables, par, KNN, ("binary",), (0,))
    again, _ = run_paradigm(small_tables, par, KNN, ("binary",), (0,), threads=3)
    assert [r["unit"] for r in rows] == ["S01", "S02", "S03", "S04", "S05"]
    assert json.dumps(rows, sort_keys=True) == json.dumps(again, sort_keys=True)
    for r in rows:
        assert 0.0 <= r["f1"][0] <= 1.0
        assert r["counts"][0]["train"] > r["counts"][0]["test"] > 0


def test_finetune_fraction_zero_equals_lopo(small_tables):
    ft, _ = run_paradigm(small_tables, ParadigmSpec("fine_tuned", target_subject="S02", target_fraction=0.0),
                         KNN, ("binary",), (0,))
    lopo, _ = run_paradigm(small_tables, ParadigmSpec("multi_subject", pooled=False), KNN, ("binary",), (0,))
    by = {(r["variant"], r["unit"]): r for r in ft + lopo}
    assert by[("fine_tuned", "S02")]["f1"] == by[("zero_shot", "S02")]["f1"] == by[("lopo", "S02")]["f1"]
    assert by[("fine_tuned", "S02")]["counts"][0]["calibration"] == 0


def test_regression_rows_have_scatter(small_tables):
    rows, scatter = run_paradigm(small_tables, ParadigmSpec("single_subject"), ModelSpec("knn", "regression"),
                                 ("regression",), (0,))
    assert all("r2" in r and "mse" in r for r in rows)
    assert len(scatter) == len(rows)


def test_no_condition_match(small_cohort):
    with pytest.raises(InsufficientDataError, match="no demonstrations matched"):
        build_tables(small_cohort, condition="lunar-active")


def test_report_structure(small_tables, tmp_path):
    pars = [ParadigmSpec("single_subject"), ParadigmSpec("multi_subject"),
            ParadigmSpec("fine_tuned", target_subject="S01")]
    rep = run_evaluation(small_tables, pars, {"knn": KNN, "svm": ModelSpec("svm", "binary")},
                         ("binary", "regression"), (0,), config={"seed": 0})
    assert not any(r["model"] == "svm" and r["task"] == "regression" for r in rep.rows)
    paths = rep.write(tmp_path)
    d = json.loads(paths["json"].read_text())
    assert d["report_version"] == 1 and d["config"] == {"seed": 0}
    md = paths["markdown"].read_text()
    assert "| Condition | Single | Multi | Cross-Sub | Zero-shot | Fine-tuned |" in md
    assert "robot-passive" in md
    assert any(p.name.startswith("scatter_") for p in tmp_path.iterdir())
