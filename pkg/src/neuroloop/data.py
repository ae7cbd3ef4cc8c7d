"""Canonical domain types and the on-disk dataset format.

A demonstration directory holds four files::

    meta.json      {subject_id, domain, interaction, session, channels, format_version}
    neural.csv     time,ch1..chM
    baseline.csv   time,ch1..chM
    task.csv       time,episode,state_0..,action_kind,action_0..,chosen,reward,
                   label_b,label_v,label_e

Floats are written with 9 significant digits, so a value that is already
representable at that precision survives a save/load cycle bit for bit.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import SchemaError, ValidationError

FORMAT_VERSION = 1
NOMINAL_RATE_HZ = 5.2
N_CANONICAL_CHANNELS = 8
CHANNEL_NAMES = tuple(
    f"{hb}_{side}_{src}"
    for hb in ("oxy", "deoxy")
    for side in ("left", "right")
    for src in ("A", "B")
)
DOMAINS = ("robot", "lunar", "flappy", "synthetic-discrete", "synthetic-continuous")
INTERACTIONS = ("passive", "active")

PROB_SUM_TOL = 1e-6
FLOAT_FMT = ".9g"

Condition = tuple  # (domain, interaction)


def _readonly(values, dtype=float, ndim=None) -> np.ndarray:
    arr = np.array(values, dtype=dtype)
    if ndim is not None and arr.ndim != ndim:
        raise ValidationError(f"expected a {ndim}-d array, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


def quantize(x):
    """Round to the precision used on disk (9 significant digits)."""
    if np.ndim(x) == 0:
        return float(format(float(x), FLOAT_FMT))
    return np.vectorize(lambda v: float(format(v, FLOAT_FMT)), otypes=[float])(x)


# ---------------------------------------------------------------------------
# Neural data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class NeuralRecord:
    """T x M channel samples with strictly increasing timestamps (seconds)."""

    timestamps: np.ndarray
    samples: np.ndarray
    channels: tuple = None

    def __post_init__(self):
        ts = _readonly(self.timestamps, ndim=1)
        x = np.array(self.samples, dtype=float)
        if x.ndim == 1 and x.size == 0:
            x = x.reshape(0, len(self.channels) if self.channels else N_CANONICAL_CHANNELS)
        if x.ndim != 2:
            raise ValidationError(f"samples must be T x M, got shape {x.shape}")
        x.setflags(write=False)
        if x.shape[0] != ts.shape[0]:
            raise ValidationError(
                f"row count {x.shape[0]} does not match timestamp count {ts.shape[0]}"
            )
        channels = self.channels
        if channels is None:
            channels = (
                CHANNEL_NAMES
                if x.shape[1] == N_CANONICAL_CHANNELS
                else tuple(f"ch{i + 1}" for i in range(x.shape[1]))
            )
        channels = tuple(str(c) for c in channels)
        if len(channels) != x.shape[1]:
            raise ValidationError(
                f"{len(channels)} channel names for {x.shape[1]} sample columns"
            )
        if not np.all(np.isfinite(ts)):
            raise ValidationError("timestamps contain non-finite values")
        bad = np.flatnonzero(np.diff(ts) <= 0)
        if bad.size:
            raise ValidationError(
                f"timestamps not strictly increasing at index {bad[0] + 1}"
            )
        if not np.all(np.isfinite(x)):
            row = int(np.flatnonzero(~np.isfinite(x).all(axis=1))[0])
            raise ValidationError(f"non-finite sample at row {row}")
        object.__setattr__(self, "timestamps", ts)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "channels", channels)

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def n_channels(self) -> int:
        return self.samples.shape[1]

    @property
    def time_range(self) -> tuple:
        if self.n_samples == 0:
            raise ValidationError("empty record")
        return float(self.timestamps[0]), float(self.timestamps[-1])

    def with_samples(self, samples) -> "NeuralRecord":
        return NeuralRecord(self.timestamps, samples, self.channels)

    def __eq__(self, other):
        if not isinstance(other, NeuralRecord):
            return NotImplemented
        return (
            self.channels == other.channels
            and np.array_equal(self.timestamps, other.timestamps)
            and np.array_equal(self.samples, other.samples)
        )

    __hash__ = None


# ---------------------------------------------------------------------------
# Task data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DiscreteAction:
    """Probability vector over n actions plus the index that was executed.

    ``probs`` is kept as given (after checking it sums to 1 within 1e-6);
    use :attr:`distribution` for the exactly renormalized vector.
    """

    probs: np.ndarray
    chosen: int

    kind = "discrete"

    def __post_init__(self):
        p = _readonly(self.probs, ndim=1)
        if p.size < 2:
            raise ValidationError("a discrete action needs at least 2 entries")
        if not np.all(np.isfinite(p)) or np.any(p < 0):
            raise ValidationError("probabilities must be finite and non-negative")
        total = float(p.sum())
        if abs(total - 1.0) > PROB_SUM_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")
        chosen = int(self.chosen)
        if not 0 <= chosen < p.size:
            raise ValidationError(f"chosen index {chosen} outside 0..{p.size - 1}")
        object.__setattr__(self, "probs", p)
        object.__setattr__(self, "chosen", chosen)

    @classmethod
    def one_hot(cls, chosen: int, n: int) -> "DiscreteAction":
        p = np.zeros(n)
        p[chosen] = 1.0
        return cls(p, chosen)

    @cached_property
    def distribution(self) -> np.ndarray:
        d = self.probs / self.probs.sum()
        d.setflags(write=False)
        return d

    @property
    def size(self) -> int:
        return self.probs.size

    def __eq__(self, other):
        if not isinstance(other, DiscreteAction):
            return NotImplemented
        return self.chosen == other.chosen and np.array_equal(self.probs, other.probs)

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ContinuousAction:
    values: np.ndarray

    kind = "continuous"

    def __post_init__(self):
        v = _readonly(self.values, ndim=1)
        if v.size == 0 or not np.all(np.isfinite(v)):
            raise ValidationError("continuous action must be a non-empty finite vector")
        object.__setattr__(self, "values", v)

    @property
    def size(self) -> int:
        return self.values.size

    def __eq__(self, other):
        if not isinstance(other, ContinuousAction):
            return NotImplemented
        return np.array_equal(self.values, other.values)

    __hash__ = None


Action = Union[DiscreteAction, ContinuousAction]


@dataclass(frozen=True, eq=False)
class TransitionStep:
    """One agent transition with its performance labels (B, V, E)."""

    time: float
    episode_id: int
    state: np.ndarray
    action: Action
    reward: float
    binary_label: int = 0
    class_label: int = 0
    error_label: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "time", float(self.time))
        object.__setattr__(self, "episode_id", int(self.episode_id))
        object.__setattr__(self, "state", _readonly(self.state, ndim=1))
        object.__setattr__(self, "reward", float(self.reward))
        b, v = int(self.binary_label), int(self.class_label)
        if b not in (0, 1):
            raise ValidationError(f"binary label must be 0 or 1, got {b}")
        if v not in (0, 1, 2):
            raise ValidationError(f"class label must be 0, 1 or 2, got {v}")
        if (b == 0) != (v == 0):
            raise ValidationError(f"inconsistent labels B={b}, V={v}")
        object.__setattr__(self, "binary_label", b)
        object.__setattr__(self, "class_label", v)
        if self.error_label is not None:
            e = float(self.error_label)
            if not math.isfinite(e) or e < 0:
                raise ValidationError(f"error label must be finite and >= 0, got {e}")
            object.__setattr__(self, "error_label", e)
        if not math.isfinite(self.time) or not math.isfinite(self.reward):
            raise ValidationError("time and reward must be finite")
        if not isinstance(self.action, (DiscreteAction, ContinuousAction)):
            raise ValidationError(f"unsupported action type {type(self.action).__name__}")

    def with_labels(self, binary=None, cls=None, error=None) -> "TransitionStep":
        changes = {}
        if binary is not None:
            changes["binary_label"] = binary
        if cls is not None:
            changes["class_label"] = cls
        if error is not None:
            changes["error_label"] = error
        return replace(self, **changes)

    def __eq__(self, other):
        if not isinstance(other, TransitionStep):
            return NotImplemented
        return (
            self.time == other.time
            and self.episode_id == other.episode_id
            and np.array_equal(self.state, other.state)
            and self.action == other.action
            and self.reward == other.reward
            and self.binary_label == other.binary_label
            and self.class_label == other.class_label
            and self.error_label == other.error_label
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class TaskRecord:
    steps: tuple
    domain: str
    interaction: str = "passive"

    def __post_init__(self):
        steps = tuple(self.steps)
        if self.domain not in DOMAINS:
            raise ValidationError(f"unknown domain {self.domain!r}; expected one of {DOMAINS}")
        if self.interaction not in INTERACTIONS:
            raise ValidationError(f"unknown interaction {self.interaction!r}")
        kinds = {}
        for i in range(1, len(steps)):
            if steps[i].time < steps[i - 1].time:
                raise ValidationError(f"step times decrease at index {i}")
            if steps[i].episode_id < steps[i - 1].episode_id:
                raise ValidationError(f"episode ids decrease at index {i}")
        for i, s in enumerate(steps):
            k = kinds.setdefault(s.episode_id, s.action.kind)
            if k != s.action.kind:
                raise ValidationError(
                    f"episode {s.episode_id} mixes {k} and {s.action.kind} actions (index {i})"
                )
        object.__setattr__(self, "steps", steps)

    def __len__(self):
        return len(self.steps)

    @cached_property
    def times(self) -> np.ndarray:
        return _readonly([s.time for s in self.steps])

    @cached_property
    def episode_ids(self) -> np.ndarray:
        return _readonly([s.episode_id for s in self.steps], dtype=int)

    @cached_property
    def binary_labels(self) -> np.ndarray:
        return _readonly([s.binary_label for s in self.steps], dtype=int)

    @cached_property
    def class_labels(self) -> np.ndarray:
        return _readonly([s.class_label for s in self.steps], dtype=int)

    @cached_property
    def error_labels(self) -> np.ndarray:
        return _readonly(
            [np.nan if s.error_label is None else s.error_label for s in self.steps]
        )

    @property
    def time_range(self) -> tuple:
        if not self.steps:
            raise ValidationError("empty record")
        return self.steps[0].time, self.steps[-1].time

    def episodes(self) -> dict:
        """Map episode id -> tuple of steps, in order."""
        out = {}
        for s in self.steps:
            out.setdefault(s.episode_id, []).append(s)
        return {k: tuple(v) for k, v in out.items()}

    def __eq__(self, other):
        if not isinstance(other, TaskRecord):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.interaction == other.interaction
            and self.steps == other.steps
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class Demonstration:
    """One participant x condition session."""

    subject_id: str
    baseline: NeuralRecord
    neural: NeuralRecord
    task: TaskRecord
    session: int = 0

    @property
    def condition(self) -> Condition:
        return (self.task.domain, self.task.interaction)

    def __eq__(self, other):
        if not isinstance(other, Demonstration):
            return NotImplemented
        return (
            self.subject_id == other.subject_id
            and self.session == other.session
            and self.baseline == other.baseline
            and self.neural == other.neural
            and self.task == other.task
        )

    __hash__ = None


def condition_name(condition: Condition) -> str:
    return f"{condition[0]}-{condition[1]}"


def parse_condition(name: str) -> Condition:
    for interaction in INTERACTIONS:
        suffix = "-" + interaction
        if name.endswith(suffix) and name[: -len(suffix)] in DOMAINS:
            return (name[: -len(suffix)], interaction)
    raise ValidationError(f"cannot parse condition {name!r}; expected <domain>-<interaction>")


def _range_overlap(a: tuple, b: tuple) -> float:
    return max(0.0, min(a[1], b[1]) - max(a[0], b[0]))


def _covered_fraction(inter: float, rng: tuple, other: tuple) -> float:
    length = rng[1] - rng[0]
    if length <= 0:
        return 1.0 if other[0] <= rng[0] <= other[1] else 0.0
    return inter / length


def check_demonstration(demo: Demonstration) -> None:
    """Raise ValidationError unless ``demo`` satisfies the type invariants."""
    if demo.baseline.n_samples == 0:
        raise ValidationError("empty baseline")
    if demo.neural.n_samples == 0:
        raise ValidationError("empty neural record")
    if not demo.task.steps:
        raise ValidationError("empty task record")
    if demo.baseline.n_channels != demo.neural.n_channels:
        raise ValidationError("baseline and neural channel counts differ")
    if demo.baseline.timestamps[-1] >= demo.neural.timestamps[0]:
        raise ValidationError("baseline must precede the neural record in time")
    nr, tr = demo.neural.time_range, demo.task.time_range
    inter = _range_overlap(nr, tr)
    frac = max(_covered_fraction(inter, nr, tr), _covered_fraction(inter, tr, nr))
    if frac < 0.9:
        raise ValidationError(
            f"neural and task ranges overlap by {frac:.3f} of the shorter range (< 0.9)"
        )


# ---------------------------------------------------------------------------
# Alignment report
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AlignmentReport:
    neural_coverage: float
    task_coverage: float
    overlap: float
    rate_hz: float
    gaps: tuple
    passed: bool


def validate_alignment(demo: Demonstration, nominal_rate=NOMINAL_RATE_HZ,
                       rate_tol=0.5, min_overlap=0.9) -> AlignmentReport:
    """Check that the neural and task streams cover the same stretch of time.

    ``overlap`` is the smaller of the two coverage fractions (intersection
    over neural range, intersection over task range). ``gaps`` lists
    ``(index, duration_s)`` for neural sample intervals longer than 1.5x
    the nominal spacing.
    """
    if demo.neural.n_samples == 0 or not demo.task.steps:
        raise ValidationError("empty record")
    nr, tr = demo.neural.time_range, demo.task.time_range
    inter = _range_overlap(nr, tr)
    neural_cov = _covered_fraction(inter, nr, tr)
    task_cov = _covered_fraction(inter, tr, nr)
    overlap = min(neural_cov, task_cov)

    ts = demo.neural.timestamps
    if ts.size >= 2 and ts[-1] > ts[0]:
        rate = (ts.size - 1) / (ts[-1] - ts[0])
    else:
        rate = float("nan")
    dt = np.diff(ts)
    limit = 1.5 / nominal_rate
    gaps = tuple((int(i) + 1, float(dt[i])) for i in np.flatnonzero(dt > limit))
    passed = bool(overlap >= min_overlap and abs(rate - nominal_rate) <= rate_tol)
    return AlignmentReport(neural_cov, task_cov, overlap, float(rate), gaps, passed)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def _fmt(x) -> str:
    return format(float(x), FLOAT_FMT)


def _neural_csv(rec: NeuralRecord) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["time"] + [f"ch{i + 1}" for i in range(rec.n_channels)])
    for t, row in zip(rec.timestamps, rec.samples):
        w.writerow([_fmt(t)] + [_fmt(v) for v in row])
    return buf.getvalue()


def _task_csv(task: TaskRecord) -> str:
    d_state = max((s.state.size for s in task.steps), default=0)
    d_action = max((s.action.size for s in task.steps), default=0)
    header = (
        ["time", "episode"]
        + [f"state_{i}" for i in range(d_state)]
        + ["action_kind"]
        + [f"action_{i}" for i in range(d_action)]
        + ["chosen", "reward", "label_b", "label_v", "label_e"]
    )
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for s in task.steps:
        state = [_fmt(v) for v in s.state] + [""] * (d_state - s.state.size)
        if isinstance(s.action, DiscreteAction):
            values, chosen = s.action.probs, str(s.action.chosen)
        else:
            values, chosen = s.action.values, ""
        action = [_fmt(v) for v in values] + [""] * (d_action - values.size)
        label_e = "" if s.error_label is None else _fmt(s.error_label)
        w.writerow(
            [_fmt(s.time), str(s.episode_id)] + state + [s.action.kind] + action
            + [chosen, _fmt(s.reward), str(s.binary_label), str(s.class_label), label_e]
        )
    return buf.getvalue()


def _write(path: Path, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def save_task_csv(task: TaskRecord, path) -> Path:
    """Write a task record alone, in the same layout as a demonstration's task.csv."""
    path = Path(path)
    _write(path, _task_csv(task))
    return path


def save_demonstration(demo: Demonstration, directory) -> Path:
    """Write ``demo`` to ``directory`` in the canonical schema.

    Invariants are checked before anything touches the disk.
    """
    check_demonstration(demo)
    if demo.baseline.channels != demo.neural.channels:
        raise ValidationError("baseline and neural channel names differ")
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    meta = {
        "subject_id": demo.subject_id,
        "domain": demo.task.domain,
        "interaction": demo.task.interaction,
        "session": demo.session,
        "channels": list(demo.neural.channels),
        "format_version": FORMAT_VERSION,
    }
    _write(out / "meta.json", json.dumps(meta, indent=2, sort_keys=True) + "\n")
    _write(out / "neural.csv", _neural_csv(demo.neural))
    _write(out / "baseline.csv", _neural_csv(demo.baseline))
    _write(out / "task.csv", _task_csv(demo.task))
    return out


def _read_rows(path: Path, required: Sequence[str]) -> tuple:
    if not path.is_file():
        raise SchemaError(f"missing file: {path.name}")
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaError(f"{path.name}: empty file") from None
        for col in required:
            if col not in header:
                raise SchemaError(f"{path.name}: missing column {col!r}")
        rows = [r for r in reader if r]
    return header, rows


def _read_neural(path: Path, channels=None) -> NeuralRecord:
    header, rows = _read_rows(path, ["time"])
    ch_cols = [c for c in header if c.startswith("ch")]
    if not ch_cols:
        raise SchemaError(f"{path.name}: no channel columns")
    idx_t = header.index("time")
    idx_ch = [header.index(c) for c in ch_cols]
    try:
        ts = np.array([float(r[idx_t]) for r in rows])
        x = np.array([[float(r[i]) for i in idx_ch] for r in rows]).reshape(len(rows), len(ch_cols))
    except (ValueError, IndexError) as exc:
        raise SchemaError(f"{path.name}: unparseable value ({exc})") from None
    if channels is not None and len(channels) != len(ch_cols):
        raise SchemaError(f"{path.name}: {len(ch_cols)} channel columns, meta lists {len(channels)}")
    try:
        return NeuralRecord(ts, x, channels)
    except ValidationError as exc:
        raise ValidationError(f"{path.name}: {exc}") from None


TASK_REQUIRED = ("time", "episode", "action_kind", "chosen", "reward", "label_b", "label_v", "label_e")


def _read_task(path: Path, domain: str, interaction: str) -> TaskRecord:
    header, rows = _read_rows(path, TASK_REQUIRED)
    col = {name: i for i, name in enumerate(header)}
    state_cols = sorted((c for c in header if c.startswith("state_")), key=lambda c: int(c[6:]))
    action_cols = sorted((c for c in header if c.startswith("action_") and c != "action_kind"),
                         key=lambda c: int(c[7:]))

    def floats(r, cols):
        return [float(r[col[c]]) for c in cols if r[col[c]] != ""]

    steps = []
    for n, r in enumerate(rows):
        try:
            kind = r[col["action_kind"]]
            values = floats(r, action_cols)
            if kind == "discrete":
                p = np.array(values)
                total = p.sum()
                if abs(total - 1.0) > PROB_SUM_TOL:
                    raise ValidationError(
                        f"{path.name}: probability row {n} sums to {total!r}"
                    )
                action = DiscreteAction(p, int(r[col["chosen"]]))
            elif kind == "continuous":
                action = ContinuousAction(values)
            else:
                raise SchemaError(f"{path.name}: row {n}: unknown action_kind {kind!r}")
            label_e = r[col["label_e"]]
            steps.append(TransitionStep(
                time=float(r[col["time"]]),
                episode_id=int(r[col["episode"]]),
                state=floats(r, state_cols),
                action=action,
                reward=float(r[col["reward"]]),
                binary_label=int(r[col["label_b"]]),
                class_label=int(r[col["label_v"]]),
                error_label=None if label_e == "" else float(label_e),
            ))
        except (IndexError, KeyError) as exc:
            raise SchemaError(f"{path.name}: malformed row {n} ({exc})") from None
        except ValidationError:
            raise
        except ValueError as exc:
            raise SchemaError(f"{path.name}: row {n}: {exc}") from None
    return TaskRecord(tuple(steps), domain, interaction)


def load_demonstration(directory) -> Demonstration:
    """Read and fully validate a demonstration directory."""
    d = Path(directory)
    meta_path = d / "meta.json"
    if not meta_path.is_file():
        raise SchemaError(f"missing file: meta.json in {d}")
    meta = json.loads(meta_path.read_text(encoding="utf-8"))
    for key in ("subject_id", "domain", "interaction", "format_version"):
        if key not in meta:
            raise SchemaError(f"meta.json: missing key {key!r}")
    if meta["format_version"] != FORMAT_VERSION:
        raise SchemaError(
            f"meta.json: format_version {meta['format_version']} != {FORMAT_VERSION}"
        )
    channels = meta.get("channels")
    channels = tuple(channels) if channels else None
    neural = _read_neural(d / "neural.csv", channels)
    baseline = _read_neural(d / "baseline.csv", channels)
    task = _read_task(d / "task.csv", meta["domain"], meta["interaction"])
    demo = Demonstration(str(meta["subject_id"]), baseline, neural, task, int(meta.get("session", 0)))
    check_demonstration(demo)
    return demo


# ---------------------------------------------------------------------------
# Dataset manifest
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ManifestEntry:
    subject_id: str
    domain: str
    interaction: str
    session: int
    path: str  # relative to the dataset root

    @property
    def condition(self) -> Condition:
        return (self.domain, self.interaction)


@dataclass(frozen=True)
class DatasetManifest:
    entries: tuple = ()
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        entries = tuple(self.entries)
        seen = set()
        for e in entries:
            key = (e.subject_id, e.domain, e.interaction, e.session)
            if key in seen:
                raise ValidationError(f"duplicate manifest entry {key}")
            seen.add(key)
        object.__setattr__(self, "entries", entries)

    @property
    def subjects(self) -> list:
        return sorted({e.subject_id for e in self.entries})

    def conditions(self, subject_id: str) -> list:
        return sorted({e.condition for e in self.entries if e.subject_id == subject_id})

    def to_json(self) -> str:
        payload = {
            "format_version": self.format_version,
            "subjects": self.subjects,
            "demonstrations": [
                {"subject_id": e.subject_id, "domain": e.domain, "interaction": e.interaction,
                 "session": e.session, "path": e.path}
                for e in self.entries
            ],
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


MANIFEST_NAME = "manifest.json"


def save_manifest(manifest: DatasetManifest, root) -> Path:
    path = Path(root) / MANIFEST_NAME
    _write(path, manifest.to_json())
    return path


def load_manifest(root) -> DatasetManifest:
    root = Path(root)
    path = root / MANIFEST_NAME
    if not path.is_file():
        raise SchemaError(f"missing file: {MANIFEST_NAME} in {root}")
    payload = json.loads(path.read_text(encoding="utf-8"))
    if payload.get("format_version") != FORMAT_VERSION:
        raise SchemaError(f"{MANIFEST_NAME}: unsupported format_version {payload.get('format_version')}")
    entries = []
    for item in payload.get("demonstrations", []):
        e = ManifestEntry(str(item["subject_id"]), item["domain"], item["interaction"],
                          int(item.get("session", 0)), item["path"])
        if not (root / e.path).is_dir():
            raise SchemaError(f"{MANIFEST_NAME}: referenced directory {e.path!r} does not exist")
        entries.append(e)
    return DatasetManifest(tuple(entries))


def load_dataset(root, conditions: Iterable[Condition] | None = None) -> list:
    """Load every demonstration listed in the manifest, optionally filtered by condition."""
    root = Path(root)
    manifest = load_manifest(root)
    wanted = None if conditions is None else {tuple(c) for c in conditions}
    demos = []
    for e in manifest.entries:
        if wanted is not None and e.condition not in wanted:
            continue
        demos.append(load_demonstration(root / e.path))
    return demos
