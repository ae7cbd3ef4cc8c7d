"""Class balancing, episode-grouped splits, training paradigms and reports.

Three paradigms are supported:

* ``single_subject``: each subject's windows are balanced, split 60/20/20
  by episode and used to train and test one model per subject
* ``multi_subject``: all subjects pooled and split the same way, plus a
  leave-subjects-out (LOPO) variant that tests on unseen subjects
* ``fine_tuned``: a model trained on every subject but the target is
  updated with a fraction of the target's balanced windows and tested on
  the rest

Work units (subject x seed, fold x seed, ...) run on a thread pool; their
results are collected in a fixed order, so reports do not depend on the
number of workers.
"""

from __future__ import annotations

import hashlib
import itertools
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import condition_name
from .errors import InsufficientDataError, ValidationError
from .features import FeatureTable, WindowSpec, featurize_demonstration
from .learners import ModelSpec, fine_tune, predict, train_model
from .preprocess import FilterSpec

log = logging.getLogger(__name__)

PARADIGMS = ("single_subject", "multi_subject", "fine_tuned")
SPLIT_FRACTIONS = (0.6, 0.2, 0.2)
SPLIT_NAMES = ("train", "validation", "test")
SPLIT_TOLERANCE = 0.1  # flag a set whose share is this far from its target
REPORT_VERSION = 1


# ---------------------------------------------------------------------------
# Balancing and splitting
# ---------------------------------------------------------------------------


def downsample_majority(labels, seed) -> np.ndarray:
    """Indices that keep ``min count`` windows of every class, in original order."""
    labels = np.asarray(labels)
    classes, counts = np.unique(labels, return_counts=True)
    if classes.size < 2:
        raise ValidationError(f"single class {classes.tolist()}: nothing to balance against")
    rng = np.random.default_rng(seed)
    m = counts.min()
    keep = [rng.choice(np.flatnonzero(labels == c), size=m, replace=False) for c in classes]
    return np.sort(np.concatenate(keep))


@dataclass(frozen=True)
class SplitPlan:
    train: np.ndarray
    validation: np.ndarray
    test: np.ndarray
    groups: dict  # set name -> tuple of group keys
    flags: tuple = ()

    def sets(self):
        return {"train": self.train, "validation": self.validation, "test": self.test}

    def counts(self) -> dict:
        return {k: int(v.size) for k, v in self.sets().items()}


def split_dataset(groups, labels=None, seed=0, fractions=SPLIT_FRACTIONS) -> SplitPlan:
    """Assign whole groups (episodes) to train/validation/test.

    Groups are shuffled by ``seed`` and each goes to the set furthest
    below its window-count target. If a set then lacks a class that
    another set can spare, the smallest group carrying it is moved over.
    Sets whose share of windows misses its target by more than
    ``SPLIT_TOLERANCE`` are listed in ``flags``.
    """
    groups = np.asarray(groups, dtype=object)
    keys, inverse, sizes = np.unique(groups, return_inverse=True, return_counts=True)
    if keys.size < 3:
        raise ValidationError(f"need at least 3 episodes to split, got {keys.size}")
    if abs(sum(fractions) - 1.0) > 1e-9 or len(fractions) != 3:
        raise ValidationError(f"split fractions must be three numbers summing to 1, got {fractions}")
    rng = np.random.default_rng(seed)
    order = rng.permutation(keys.size)
    n = groups.size
    target = np.array(fractions) * n
    filled = np.zeros(3)
    owner = np.empty(keys.size, dtype=int)
    for g in order:
        s = int(np.argmax(target - filled))
        owner[g] = s
        filled[s] += sizes[g]

    flags = []
    if labels is not None:
        labels = np.asarray(labels)
        classes = np.unique(labels)
        has = {}
        for g in range(keys.size):
            has[g] = set(np.unique(labels[inverse == g]).tolist())
        for s in range(3):
            for c in classes.tolist():
                if any(c in has[g] for g in range(keys.size) if owner[g] == s):
                    continue
                donors = [g for g in order if owner[g] != s and c in has[g]
                          and sum(1 for h in range(keys.size) if owner[h] == owner[g] and c in has[h]) > 1]
                if not donors:
                    flags.append(f"{SPLIT_NAMES[s]} has no windows of class {c}")
                    continue
                g = min(donors, key=lambda d: sizes[d])
                filled[owner[g]] -= sizes[g]
                filled[s] += sizes[g]
                owner[g] = s

    for s in range(3):
        if abs(filled[s] - target[s]) > SPLIT_TOLERANCE * n:
            flags.append(f"{SPLIT_NAMES[s]} holds {int(filled[s])} windows, target {target[s]:.1f}")
    idx = {s: np.flatnonzero(owner[inverse] == s) for s in range(3)}
    plan = SplitPlan(idx[0], idx[1], idx[2],
                     {SPLIT_NAMES[s]: tuple(sorted(keys[owner == s].tolist())) for s in range(3)},
                     tuple(flags))
    check_no_leakage(plan, groups)
    return plan


def check_no_leakage(plan: SplitPlan, groups) -> None:
    groups = np.asarray(groups, dtype=object)
    test = set(groups[plan.test].tolist())
    rest = set(groups[plan.train].tolist()) | set(groups[plan.validation].tolist())
    if test & rest:
        raise AssertionError(f"episodes in both test and train/validation: {sorted(test & rest)[:5]}")


def lopo_partition(subjects, holdout=1, max_folds=None, seed=0) -> list:
    """Folds as ``(train_subjects, held_out_subjects)`` tuples.

    ``holdout=2`` enumerates all pairs unless ``max_folds`` caps them, in
    which case a seeded subset that still withholds every subject is kept.
    """
    subjects = sorted(set(subjects))
    if holdout not in (1, 2):
        raise ValidationError(f"holdout must be 1 or 2, got {holdout}")
    if len(subjects) < 3:
        raise ValidationError(f"need at least 3 subjects for LOPO, got {len(subjects)}")
    held = list(itertools.combinations(subjects, holdout))
    if max_folds is not None and len(held) > max_folds:
        if max_folds * holdout < len(subjects):
            raise ValidationError(f"{max_folds} folds cannot withhold all {len(subjects)} subjects")
        order = np.random.default_rng(seed).permutation(len(held)).tolist()
        chosen, covered = [], set()
        while len(chosen) < max_folds:
            # next fold: the one withholding the most not-yet-covered subjects
            i = max((j for j in order if j not in chosen), key=lambda j: len(set(held[j]) - covered))
            chosen.append(i)
            covered |= set(held[i])
        held = [held[i] for i in sorted(chosen)]
    return [(tuple(s for s in subjects if s not in h), h) for h in held]


# ---------------------------------------------------------------------------
# Metrics
# ---------------------------------------------------------------------------


def confusion_matrix(y_true, y_pred, n_classes) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=int)
    np.add.at(cm, (np.asarray(y_true, dtype=int), np.asarray(y_pred, dtype=int)), 1)
    return cm


def f1_macro(y_true, y_pred) -> float:
    """Unweighted mean of per-class F1 over classes seen in truth or prediction."""
    y_true = np.asarray(y_true)
    y_pred = np.asarray(y_pred)
    if y_true.size == 0:
        raise ValidationError("empty input")
    if y_true.shape != y_pred.shape:
        raise ValidationError(f"length mismatch: {y_true.size} vs {y_pred.size}")
    scores = []
    for c in np.union1d(y_true, y_pred):
        tp = np.sum((y_true == c) & (y_pred == c))
        denom = np.sum(y_true == c) + np.sum(y_pred == c)
        scores.append(2.0 * tp / denom if denom else 0.0)
    return float(np.mean(scores))


def regression_metrics(y_true, y_pred) -> tuple:
    """``(MSE, R^2)``; R^2 is ``None`` when ``y_true`` is constant."""
    y_true = np.asarray(y_true, dtype=float)
    y_pred = np.asarray(y_pred, dtype=float)
    if y_true.shape != y_pred.shape:
        raise ValidationError(f"length mismatch: {y_true.size} vs {y_pred.size}")
    if y_true.size < 2:
        raise ValidationError("need at least 2 samples")
    res = y_true - y_pred
    mse = float(np.mean(res ** 2))
    ss_tot = float(np.sum((y_true - y_true.mean()) ** 2))
    r2 = None if ss_tot == 0 else 1.0 - float(np.sum(res ** 2)) / ss_tot
    return mse, r2


# ---------------------------------------------------------------------------
# Paradigms
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ParadigmSpec:
    paradigm: str
    condition: str | None = None  # e.g. "robot-passive"; None = every condition
    target_subject: str | None = None
    target_fraction: float = 0.2
    holdout: int = 1
    lopo: bool = True
    pooled: bool = True  # multi_subject: also run the pooled 60/20/20 split
    shuffle_labels: bool = False

    def __post_init__(self):
        if self.paradigm not in PARADIGMS:
            raise ValidationError(f"unknown paradigm {self.paradigm!r}; choose from {PARADIGMS}")
        if not 0.0 <= self.target_fraction < 1.0:
            raise ValidationError(f"target_fraction must lie in [0, 1), got {self.target_fraction}")
        if self.holdout not in (1, 2):
            raise ValidationError(f"holdout must be 1 or 2, got {self.holdout}")


def build_tables(demos, window: WindowSpec = WindowSpec(), filt: FilterSpec = FilterSpec(),
                 condition=None) -> dict:
    """Feature tables keyed by ``(condition name, subject)``, sessions concatenated."""
    by_key = {}
    for demo in demos:
        cond = condition_name(demo.condition)
        if condition is not None and cond != condition:
            continue
        by_key.setdefault((cond, demo.subject_id), []).append(featurize_demonstration(demo, window, filt))
    if not by_key:
        raise InsufficientDataError("load", f"no demonstrations matched condition {condition!r}")
    return {k: FeatureTable.concat(v) for k, v in sorted(by_key.items())}


def _labels(table: FeatureTable, task: str) -> np.ndarray:
    return table.labels(task)


def _balance_labels(table: FeatureTable, task: str) -> np.ndarray:
    # regression windows are balanced over the multi-class labels
    return table.v if task == "regression" else table.labels(task)


def balance_table(table: FeatureTable, task: str, seed, shuffle=False, stage="balance") -> FeatureTable:
    """Optionally shuffle labels, then downsample to equal class counts."""
    if len(table) == 0:
        raise InsufficientDataError(stage, "no labelled windows")
    if shuffle:
        rng = np.random.default_rng([seed, 7])
        perm = rng.permutation(len(table))
        table = FeatureTable(table.X, table.b[perm], table.v[perm], table.e[perm], table.subject,
                             table.condition, table.episode, table.group, table.time, table.dropped)
    lab = _balance_labels(table, task)
    if np.unique(lab).size < 2:
        raise InsufficientDataError(stage, f"only class {np.unique(lab).tolist()} present")
    return table.take(downsample_majority(lab, [seed, 1]))


class _TargetScale:
    """Min-max map fitted on training targets."""

    def __init__(self, y):
        self.lo = float(np.min(y))
        span = float(np.max(y)) - self.lo
        self.span = span if span > 0 else 1.0

    def __call__(self, y):
        return (np.asarray(y, dtype=float) - self.lo) / self.span


def _score(task, y_true, y_pred, n_classes):
    if task == "regression":
        mse, r2 = regression_metrics(y_true, y_pred)
        return {"mse": mse, "r2": r2, "n": int(len(y_true))}
    return {"f1": f1_macro(y_true, y_pred), "confusion": confusion_matrix(y_true, y_pred, n_classes).tolist(),
            "n": int(len(y_true))}


def _fit(spec, X, y, stage, threads):
    try:
        return train_model(spec, X, y, threads=threads)
    except ValidationError as exc:
        raise InsufficientDataError(stage, str(exc)) from None


def _train_and_test(model_spec, train: FeatureTable, tests: dict, task, threads):
    """Train on ``train``; score every table in ``tests``. Regression targets are min-max scaled."""
    y_tr = _labels(train, task)
    scale = _TargetScale(y_tr) if task == "regression" else None
    model = _fit(model_spec, train.X, scale(y_tr) if scale else y_tr, "train", threads)
    out = {}
    for name, t in tests.items():
        if len(t) == 0:
            continue
        y = _labels(t, task)
        y = scale(y) if scale else y
        pred = predict(model, t.X)
        out[name] = {**_score(task, y, pred, model_spec.n_classes), "_pairs": (y, pred)}
    return model, scale, out


def _single_subject_unit(table, task, model_spec, seed, shuffle, threads):
    bal = balance_table(table, task, seed, shuffle)
    plan = split_dataset(bal.group, _balance_labels(bal, task), seed=[seed, 2])
    spec = ModelSpec(model_spec.kind, task, model_spec.params, seed)
    _, _, scores = _train_and_test(spec, bal.take(plan.train),
                                   {"validation": bal.take(plan.validation), "test": bal.take(plan.test)},
                                   task, threads)
    return {"scores": scores, "counts": plan.counts(), "flags": list(plan.flags)}


def _multi_subject_unit(tables, task, model_spec, seed, shuffle, threads):
    pooled = FeatureTable.concat(tables)
    return _single_subject_unit(pooled, task, model_spec, seed, shuffle, threads)


def _target_table(table, task, seed, shuffle):
    return balance_table(table, task, [seed, 3], shuffle, stage="target")


def calibration_split(table: FeatureTable, fraction, seed) -> tuple:
    """Episode-grouped ``(calibration, remainder)`` index arrays.

    Episodes are shuffled by ``seed`` and taken until the calibration set
    holds at least ``fraction`` of the windows.
    """
    n = len(table)
    if fraction <= 0 or n == 0:
        return np.array([], dtype=int), np.arange(n)
    keys = np.unique(table.group)
    rng = np.random.default_rng(seed)
    want = fraction * n
    chosen, count = [], 0
    for k in keys[rng.permutation(keys.size)]:
        if count >= want:
            break
        chosen.append(k)
        count += int(np.sum(table.group == k))
    cal = np.isin(table.group, chosen)
    return np.flatnonzero(cal), np.flatnonzero(~cal)


def _lopo_unit(tables_by_subject, train_subjects, held, task, model_spec, seed, shuffle, threads):
    train = balance_table(FeatureTable.concat([tables_by_subject[s] for s in train_subjects]), task, seed, shuffle)
    tests = {s: _target_table(tables_by_subject[s], task, seed, shuffle) for s in held}
    spec = ModelSpec(model_spec.kind, task, model_spec.params, seed)
    _, _, scores = _train_and_test(spec, train, tests, task, threads)
    return {"scores": scores, "counts": {"train": len(train), **{s: len(t) for s, t in tests.items()}}}


def _finetune_unit(tables_by_subject, target, fraction, task, model_spec, seed, shuffle, threads):
    others = [s for s in sorted(tables_by_subject) if s != target]
    train = balance_table(FeatureTable.concat([tables_by_subject[s] for s in others]), task, seed, shuffle)
    tgt = _target_table(tables_by_subject[target], task, seed, shuffle)
    cal_idx, rest_idx = calibration_split(tgt, fraction, [seed, 4])
    if rest_idx.size == 0:
        raise InsufficientDataError("finetune", f"no target windows left for testing after calibration")
    spec = ModelSpec(model_spec.kind, task, model_spec.params, seed)
    base, scale, zero = _train_and_test(spec, train, {"zero_shot": tgt.take(rest_idx)}, task, threads)
    cal = tgt.take(cal_idx)
    y_cal = _labels(cal, task)
    tuned = fine_tune(base, cal.X, scale(y_cal) if scale else y_cal, threads=threads)
    rest = tgt.take(rest_idx)
    y = _labels(rest, task)
    y = scale(y) if scale else y
    pred = predict(tuned, rest.X)
    scores = {"zero_shot": zero["zero_shot"],
              "test": {**_score(task, y, pred, spec.n_classes), "_pairs": (y, pred)}}
    return {"scores": scores, "counts": {"train": len(train), "calibration": int(cal_idx.size),
                                         "test": int(rest_idx.size)}}


def _map(fn, jobs, threads):
    if threads > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda a: fn(*a), jobs))
    return [fn(*a) for a in jobs]


def _summary(values):
    vals = [v for v in values if v is not None]
    if not vals:
        return {"mean": None, "std": None, "n": 0}
    return {"mean": float(np.mean(vals)), "std": float(np.std(vals)), "n": len(vals)}


def _collect(unit_results, metric_set, task):
    """Fold a list of per-seed unit results into one row (per-seed values, mean/std, summed confusion)."""
    key = "r2" if task == "regression" else "f1"
    per_seed = [r["scores"][metric_set][key] if metric_set in r["scores"] else None for r in unit_results]
    row = {key: per_seed, f"{key}_summary": _summary(per_seed)}
    if task == "regression":
        row["mse"] = [r["scores"][metric_set]["mse"] for r in unit_results if metric_set in r["scores"]]
        row["mse_summary"] = _summary(row["mse"])
    else:
        cms = [np.array(r["scores"][metric_set]["confusion"]) for r in unit_results if metric_set in r["scores"]]
        row["confusion"] = np.sum(cms, axis=0).tolist() if cms else None
    return row


def _pairs(unit_results, metric_set):
    out = []
    for r in unit_results:
        if metric_set in r["scores"]:
            y, p = r["scores"][metric_set]["_pairs"]
            out.extend(zip(np.asarray(y, dtype=float).tolist(), np.asarray(p, dtype=float).tolist()))
    return out


@dataclass
class EvaluationReport:
    config: dict
    rows: list = field(default_factory=list)
    scatter: dict = field(default_factory=dict)  # row id -> [(y_true, y_pred), ...]

    def to_dict(self) -> dict:
        return {"report_version": REPORT_VERSION, "config": self.config, "rows": self.rows,
                "summary": summarize(self.rows)}

    def to_json(self) -> str:
        return json.dumps(_jsonable(self.to_dict()), sort_keys=True, indent=2) + "\n"

    def to_markdown(self) -> str:
        return render_markdown(self)

    def write(self, out_dir) -> dict:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        paths = {"json": out_dir / "report.json", "markdown": out_dir / "report.md"}
        paths["json"].write_text(self.to_json(), encoding="utf-8")
        paths["markdown"].write_text(self.to_markdown(), encoding="utf-8")
        for rid, pairs in sorted(self.scatter.items()):
            p = out_dir / f"scatter_{rid}.csv"
            p.write_text("y_true,y_pred\n" + "".join(f"{a:.9g},{b:.9g}\n" for a, b in pairs), encoding="utf-8")
            paths[f"scatter_{rid}"] = p
        return paths


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return None if not np.isfinite(x) else float(x)
    return x


def _row_id(row):
    parts = [row["condition"], row["paradigm"], row["variant"], row["model"], row["task"], row["unit"]]
    if row["shuffled"]:
        parts.append("shuffled")
    return "_".join(str(p) for p in parts).replace("/", "-").replace(":", "-").replace("+", "-")


def run_paradigm(tables: dict, paradigm: ParadigmSpec, model: ModelSpec, tasks=("binary",),
                 seeds=(0,), threads=1) -> tuple:
    """Run one paradigm for one model kind over ``tasks`` and ``seeds``.

    ``tables`` comes from :func:`build_tables`. Returns ``(rows, scatter)``.
    """
    conds = sorted({c for c, _ in tables})
    if paradigm.condition is not None:
        conds = [c for c in conds if c == paradigm.condition]
        if not conds:
            raise InsufficientDataError("load", "no demonstrations matched condition "
                                                f"{paradigm.condition!r}")
    rows, scatter = [], {}
    for cond in conds:
        by_subj = {s: t for (c, s), t in tables.items() if c == cond}
        subjects = sorted(by_subj)
        for task in tasks:
            base = {"condition": cond, "paradigm": paradigm.paradigm, "model": model.kind, "task": task,
                    "seeds": list(seeds), "shuffled": paradigm.shuffle_labels}
            sh = paradigm.shuffle_labels
            # each unit: (variant, unit name, [(metric set, row variant, row unit)], fn, per-seed jobs)
            units = []
            if paradigm.paradigm == "single_subject":
                for s in subjects:
                    units.append(("split", [("test", "split", s)], _single_subject_unit,
                                  [(by_subj[s], task, model, sd, sh, 1) for sd in seeds]))
            elif paradigm.paradigm == "multi_subject":
                if paradigm.pooled:
                    units.append(("split", [("test", "split", "pooled")], _multi_subject_unit,
                                  [([by_subj[s] for s in subjects], task, model, sd, sh, 1) for sd in seeds]))
                if paradigm.lopo:
                    for train_s, held in lopo_partition(subjects, paradigm.holdout):
                        fold = "+".join(held)
                        sets = [(h, "lopo", h if len(held) == 1 else f"{fold}:{h}") for h in held]
                        units.append(("lopo", sets, _lopo_unit,
                                      [(by_subj, train_s, held, task, model, sd, sh, 1) for sd in seeds]))
            else:
                if len(subjects) < 2:
                    raise InsufficientDataError("finetune", "need at least 2 subjects")
                targets = [paradigm.target_subject] if paradigm.target_subject else subjects
                for t in targets:
                    if t not in by_subj:
                        raise InsufficientDataError("finetune", f"target subject {t!r} not in condition {cond}")
                    units.append(("fine_tuned", [("zero_shot", "zero_shot", t), ("test", "fine_tuned", t)],
                                  _finetune_unit,
                                  [(by_subj, t, paradigm.target_fraction, task, model, sd, sh, 1)
                                   for sd in seeds]))
            flat = [(fn, args) for (_, _, fn, jobs) in units for args in jobs]
            results = _map(lambda fn, args: fn(*args), flat, threads)
            pos = 0
            for variant, sets, fn, jobs in units:
                res = results[pos:pos + len(jobs)]
                pos += len(jobs)
                for mset, row_variant, row_unit in sets:
                    row = {**base, "variant": row_variant, "unit": row_unit,
                           **_collect(res, mset, task), "counts": [r["counts"] for r in res]}
                    if variant == "split":
                        row["validation"] = _collect(res, "validation", task)
                        row["flags"] = sorted({f for r in res for f in r.get("flags", [])})
                    rows.append(row)
                    if task == "regression":
                        scatter[_row_id(row)] = _pairs(res, mset)
    return rows, scatter


def summarize(rows) -> list:
    """Mean and std over units for each (condition, paradigm, variant, model, task, shuffled)."""
    groups = {}
    for r in rows:
        key = (r["condition"], r["paradigm"], r["variant"], r["model"], r["task"], r["shuffled"])
        metric = "r2" if r["task"] == "regression" else "f1"
        groups.setdefault(key, []).append(r[f"{metric}_summary"]["mean"])
    out = []
    for (cond, par, var, mod, task, sh), vals in sorted(groups.items()):
        metric = "r2" if task == "regression" else "f1"
        out.append({"condition": cond, "paradigm": par, "variant": var, "model": mod, "task": task,
                    "shuffled": sh, "metric": metric, **_summary(vals)})
    return out


def _fmt(s):
    return "n/a" if s["mean"] is None else f"{s['mean']:.2f} ± {s['std']:.2f}"


COLUMNS = (("single_subject", "split", "Single"), ("multi_subject", "split", "Multi"),
           ("multi_subject", "lopo", "Cross-Sub"), ("fine_tuned", "zero_shot", "Zero-shot"),
           ("fine_tuned", "fine_tuned", "Fine-tuned"))


def render_markdown(report: EvaluationReport) -> str:
    summ = summarize(report.rows)
    lines = ["# Evaluation report", ""]
    for task, title in (("binary", "Binary F1"), ("multiclass", "Multi-class F1"), ("regression", "Regression R²")):
        sel = [s for s in summ if s["task"] == task]
        if not sel:
            continue
        models = sorted({s["model"] for s in sel})
        for m in models:
            lines += [f"## {title} ({m.upper()})", "",
                      "| Condition | " + " | ".join(c[2] for c in COLUMNS) + " |",
                      "|---" * (len(COLUMNS) + 1) + "|"]
            for cond in sorted({s["condition"] for s in sel}):
                for shuffled in (False, True):
                    cells = []
                    any_cell = False
                    for par, var, _ in COLUMNS:
                        hit = [s for s in sel if s["model"] == m and s["condition"] == cond and s["paradigm"] == par
                               and s["variant"] == var and s["shuffled"] == shuffled]
                        any_cell |= bool(hit)
                        cells.append(_fmt(hit[0]) if hit else "")
                    if any_cell:
                        name = cond + (" (shuffled labels)" if shuffled else "")
                        lines.append(f"| {name} | " + " | ".join(cells) + " |")
            lines.append("")
    lines += ["Values are mean ± std over subjects, folds or targets; each unit is itself averaged over seeds.", ""]
    digest = hashlib.sha256(json.dumps(_jsonable(report.config), sort_keys=True).encode()).hexdigest()[:12]
    lines += [f"Config digest: `{digest}`", ""]
    return "\n".join(lines)


def run_evaluation(tables: dict, paradigms, model_specs, tasks, seeds, threads=1, config=None) -> EvaluationReport:
    """Every paradigm x model kind, collected into one report.

    ``model_specs`` maps a kind to a ModelSpec (its task is replaced per
    task); svm is skipped for regression.
    """
    report = EvaluationReport(config=dict(config or {}))
    for par in paradigms:
        for kind, spec in model_specs.items():
            run_tasks = tuple(t for t in tasks if not (kind == "svm" and t == "regression"))
            if not run_tasks:
                continue
            log.info("paradigm=%s model=%s tasks=%s", par.paradigm, kind, ",".join(run_tasks))
            rows, scatter = run_paradigm(tables, par, spec, run_tasks, seeds, threads)
            report.rows.extend(rows)
            report.scatter.update(scatter)
    return report
