"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Lines are collected in ``RESULTS`` and echoed again in the terminal summary
(see conftest.py), so they land in test_output.txt whatever the verbosity.
"""
import hashlib
import json
import math

import numpy as np
import pytest

from neuroloop.agreement import KL_EPS, euclid_error, kl_error
from neuroloop.cli import run_cli
from neuroloop.evaluation import ParadigmSpec, build_tables, run_paradigm
from neuroloop.features import window_features
from neuroloop.learners import ModelSpec
from neuroloop.learners.mlp import MLP
from neuroloop.preprocess import FilterSpec, bandpass_filter, design_bandpass, frequency_response
from neuroloop.data import NeuralRecord
from neuroloop.synth import SynthSpec, synthesize
from neuroloop.trajectory import build_ensemble, degrade_discrete, make_domain, simulate_task

RESULTS = {}


def report(n, ok, detail):
    line = f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[n] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def cohort_tables():
    demos = [d for d, _ in synthesize(SynthSpec(seed=0))]
    return build_tables(demos)


def _mean_f1(rows):
    return float(np.mean([r["f1_summary"]["mean"] for r in rows]))


# 1. degradation formula

def test_criterion_01_degradation():
    rng = np.random.default_rng(0)
    worst = 0.0
    ok = True
    for _ in range(10_000):
        n = int(rng.integers(2, 9))
        p = rng.dirichlet(np.ones(n))
        b, w = int(np.argmax(p)), int(np.argmin(p))
        out = degrade_discrete(p)
        expect = p.copy()
        expect[w] = p[w] + p[b]
        expect[b] = 0.0
        ok &= out[b] == 0.0 and abs(out.sum() - 1.0) <= 1e-9
        worst = max(worst, float(np.max(np.abs(out - expect))))
    ok &= worst <= 1e-9
    report(1, ok, f"10^4 simplex vectors, max deviation from formula {worst:.1e}")


# 2. agreement scores

def _kl_oracle(a, pi, eps=KL_EPS):
    n = len(a)
    total = 0.0
    for ai, pii in zip(a, pi):
        if ai == 0:
            continue
        x = (ai + eps) / (1 + n * eps)
        y = (pii + eps) / (1 + n * eps)
        total += x * math.log(x / y)
    return max(total, 0.0)


def _rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_criterion_02_agreement_oracles():
    rng = np.random.default_rng(1)
    kl_err = eu_err = self_kl = 0.0
    tri_ok = True
    for _ in range(1000):
        n = int(rng.integers(2, 8))
        a, pi = rng.dirichlet(np.ones(n)), rng.dirichlet(np.ones(n))
        kl_err = max(kl_err, _rel(kl_error(a, pi), _kl_oracle(a, pi)))
        self_kl = max(self_kl, kl_error(a, a))
        x, y, z = rng.normal(size=(3, n))
        eu_err = max(eu_err, _rel(euclid_error(x, y), math.sqrt(sum((u - v) ** 2 for u, v in zip(x, y)))))
        tri_ok &= euclid_error(x, z) <= euclid_error(x, y) + euclid_error(y, z) + 1e-12
    ok = kl_err <= 1e-9 and eu_err <= 1e-9 and self_kl <= 1e-10 and tri_ok
    report(2, ok, f"KL rel err {kl_err:.1e}, Euclid rel err {eu_err:.1e}, max KL(p,p) {self_kl:.1e}, "
                  f"triangle {'holds' if tri_ok else 'violated'}")


# 3. filter response

def test_criterion_03_filter():
    spec = FilterSpec()
    sos = design_bandpass(spec)
    g_pass, g_stop = np.abs(frequency_response(sos, [0.05, 1.0], spec.sample_rate))
    rng = np.random.default_rng(2)
    x, y = rng.normal(size=(2, 4000))
    f = lambda v: bandpass_filter(NeuralRecord(np.arange(v.size) / spec.sample_rate, v[:, None])).samples[:, 0]
    lhs, rhs = f(2.5 * x - 0.7 * y), 2.5 * f(x) - 0.7 * f(y)
    lin = float(np.max(np.abs(lhs - rhs)) / np.max(np.abs(rhs)))
    ok = g_pass >= 0.7 and g_stop <= 0.1 and lin <= 1e-9
    report(3, ok, f"|H(0.05 Hz)| {g_pass:.3f}, |H(1 Hz)| {g_stop:.4f}, linearity {lin:.1e}")


# 4. window features

def _feature_oracle(window):
    L, M = window.shape
    t = np.arange(L, dtype=float)
    A = np.array([[np.sum(t * t), np.sum(t)], [np.sum(t), L]])
    out = []
    for m in range(M):
        x = window[:, m]
        slope, intercept = np.linalg.solve(A, [np.sum(t * x), np.sum(x)])
        mean = sum(x) / L
        m2 = sum((v - mean) ** 2 for v in x) / L
        m3 = sum((v - mean) ** 3 for v in x) / L
        m4 = sum((v - mean) ** 4 for v in x) / L
        out += [slope, intercept, mean, math.sqrt(m2), m3 / m2 ** 1.5, m4 / m2 ** 2 - 3.0]
    return np.array(out)


def test_criterion_04_features():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(1000):
        w = rng.normal(size=(int(rng.integers(5, 40)), 2)) * rng.uniform(0.1, 10) + rng.normal()
        ref = _feature_oracle(w)
        worst = max(worst, float(np.max(np.abs(window_features(w) - ref) / np.maximum(1.0, np.abs(ref)))))
    ramp = window_features(2.0 * np.arange(10.0))
    ramp_err = max(abs(ramp[0] - 2.0), abs(ramp[1]), abs(ramp[3] - math.sqrt(33.0)))
    ok = worst <= 1e-9 and ramp_err <= 1e-9
    report(4, ok, f"10^3 windows, max err {worst:.1e}; ramp err {ramp_err:.1e}")


# 5. MLP gradients

def test_criterion_05_mlp_gradients():
    rng = np.random.default_rng(4)
    worst = 0.0
    for n_classes in (2, 3, 0):
        net = MLP.init([6, 8, 5, n_classes or 1], n_classes, rng)
        for b in net.biases:
            b[:] = rng.normal(0, 0.5, size=b.shape)
        X = rng.normal(size=(10, 6))
        y = rng.integers(0, max(n_classes, 2), size=10) if n_classes else rng.normal(size=10)
        _, grads = net.loss_and_grads(X, y)
        h = 1e-5
        for p, g in zip(net.params, grads):
            num = np.zeros_like(p)
            for idx in np.ndindex(p.shape):
                old = p[idx]
                p[idx] = old + h
                up = net.loss(X, y)
                p[idx] = old - h
                down = net.loss(X, y)
                p[idx] = old
                num[idx] = (up - down) / (2 * h)
            worst = max(worst, float(np.linalg.norm(g - num) / max(np.linalg.norm(g) + np.linalg.norm(num), 1e-12)))
    report(5, worst <= 1e-4, f"max relative gradient error over every layer {worst:.1e}")


# 6. end-to-end synthetic oracle

def test_criterion_06_single_subject(cohort_tables):
    mlp = ModelSpec("mlp", "binary")
    f1 = {}
    for task in ("binary", "multiclass"):
        rows, _ = run_paradigm(cohort_tables, ParadigmSpec("single_subject"), mlp, (task,), (0,))
        f1[task] = _mean_f1(rows)
        rows, _ = run_paradigm(cohort_tables, ParadigmSpec("single_subject", shuffle_labels=True), mlp,
                               (task,), (0, 1, 2))
        f1[task + "_shuffled"] = _mean_f1(rows)
    ok = (f1["binary"] >= 0.85 and f1["multiclass"] >= 0.60
          and abs(f1["binary_shuffled"] - 0.50) <= 0.08 and abs(f1["multiclass_shuffled"] - 0.33) <= 0.08)
    report(6, ok, f"binary F1 {f1['binary']:.3f} (>= 0.85), multiclass F1 {f1['multiclass']:.3f} (>= 0.60), "
                  f"shuffled {f1['binary_shuffled']:.3f} / {f1['multiclass_shuffled']:.3f} "
                  "(0.50 / 0.33 +- 0.08)")


# 7. fine-tuning beats zero-shot

def test_criterion_07_fine_tuning(cohort_tables):
    seeds = (0, 1, 2, 3, 4)
    parts, ok = [], True
    for task in ("binary", "multiclass"):
        rows, _ = run_paradigm(cohort_tables, ParadigmSpec("fine_tuned"), ModelSpec("mlp", task), (task,), seeds)
        zs = _mean_f1([r for r in rows if r["variant"] == "zero_shot"])
        ft = _mean_f1([r for r in rows if r["variant"] == "fine_tuned"])
        ok &= ft > zs
        parts.append(f"{task} zero-shot {zs:.3f} -> fine-tuned {ft:.3f}")
    report(7, ok, "; ".join(parts) + " (5 targets x 5 seeds)")


# 8. regression analog

def test_criterion_08_regression(cohort_tables):
    rows, _ = run_paradigm(cohort_tables, ParadigmSpec("single_subject"), ModelSpec("rf", "regression"),
                           ("regression",), (0,))
    r2 = float(np.mean([r["r2_summary"]["mean"] for r in rows]))
    report(8, r2 >= 0.7, f"random forest single-subject mean R^2 {r2:.3f} (>= 0.70)")


# 9. heatmap point of failure

def test_criterion_09_heatmap():
    episodes = []
    for name in ("robot", "lunar"):
        dom = make_domain(name)
        ens = build_ensemble(dom, 10, rng=np.random.default_rng(0))
        _, eps = simulate_task(dom, ens, 60, np.random.default_rng(9), p_fail=0.05, modes="worstcase")
        episodes += [e for e in eps if e.t_star is not None and 0 < e.t_star < len(e.steps)]
    rises = 0
    for ep in episodes:
        err = np.array([s.error_label for s in ep.steps])
        rises += err[ep.t_star:].mean() > err[:ep.t_star].mean()
    frac = rises / max(len(episodes), 1)
    ok = len(episodes) >= 30 and frac >= 0.9
    report(9, ok, f"{len(episodes)} worst-case episodes with t* > 0, mean error rises after t* in {frac:.1%}")


# 10. determinism through the CLI

TINY = {
    "synth": {"n_subjects": 3, "episodes": 12},
    "model": {"kinds": ["knn", "mlp"], "tasks": ["binary"]},
    "paradigm": {"paradigms": ["single_subject", "multi_subject"]},
}


def test_criterion_10_determinism(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(TINY))
    assert run_cli(["synth", "--config", str(cfg), "--seed", "5", "--out", str(tmp_path / "d")]) == 0
    cfg.write_text(json.dumps({**TINY, "dataset": str(tmp_path / "d")}))
    digests = []
    for i, threads in enumerate(["1", "1", "2", "4"]):
        out = tmp_path / f"o{i}"
        assert run_cli(["evaluate", "--config", str(cfg), "--seed", "5", "--threads", threads,
                        "--out", str(out)]) == 0
        digests.append(hashlib.sha256((out / "report.json").read_bytes()).hexdigest())
    ok = len(set(digests)) == 1
    report(10, ok, f"report.json identical over 2 runs and threads 1/2/4: {ok}")


# 11. full report on a canonical-format multi-condition dataset

CONDITIONS = ["robot-passive", "robot-active", "lunar-passive", "lunar-active", "flappy-passive", "flappy-active"]


def test_criterion_11_full_report(tmp_path):
    # the human recordings are not available here; a synthetic cohort written in
    # the same on-disk format stands in for the converted dataset
    cfg = tmp_path / "c.json"
    base = {"synth": {"n_subjects": 4, "episodes": 20, "conditions": CONDITIONS},
            "model": {"kinds": ["mlp"], "tasks": ["binary", "multiclass"], "params": {"mlp": {"epochs": 60}}},
            "paradigm": {"target_subject": "S01"}}
    cfg.write_text(json.dumps(base))
    assert run_cli(["synth", "--config", str(cfg), "--out", str(tmp_path / "d")]) == 0
    cfg.write_text(json.dumps({**base, "dataset": str(tmp_path / "d")}))
    code = run_cli(["evaluate", "--config", str(cfg), "--out", str(tmp_path / "o")])
    md = (tmp_path / "o" / "report.md").read_text() if code == 0 else ""
    header = "| Condition | Single | Multi | Cross-Sub | Zero-shot | Fine-tuned |"
    tables = [s for s in md.split("## ")[1:] if header in s]
    filled = all(
        any(line.startswith(f"| {c} |") and "|  |" not in line for line in t.splitlines())
        for t in tables for c in CONDITIONS)
    ok = code == 0 and len(tables) == 2 and filled
    report(11, ok, f"exit {code}, {len(tables)} condition-by-paradigm tables, "
                   f"all {len(CONDITIONS)} conditions with every column filled: {filled}")
