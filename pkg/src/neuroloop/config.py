"""Pipeline configuration: one JSON file, documented defaults, strict keys."""

from __future__ import annotations

import copy
import json
from dataclasses import dataclass
from pathlib import Path

from .data import parse_condition
from .errors import ValidationError
from .evaluation import PARADIGMS
from .features import WindowSpec
from .learners import DEFAULT_PARAMS, KINDS, TASKS, ModelSpec
from .preprocess import FilterSpec
from .synth import SynthSpec

DEFAULTS = {
    "dataset": None,  # directory with manifest.json; synth writes one under --out
    "out": "out",
    "seed": 0,
    "threads": 1,
    "filter": {"low_cut_hz": 0.001, "high_cut_hz": 0.2, "order": 3},
    "window": {"length_s": 6.0, "stride_s": 1.0},
    "model": {
        "kinds": ["mlp"],
        "tasks": ["binary", "multiclass", "regression"],
        "params": {k: {} for k in KINDS},  # per-kind overrides of the learner defaults
    },
    "paradigm": {
        "paradigms": list(PARADIGMS),
        "condition": None,
        "target_subject": None,
        "target_fraction": 0.2,
        "holdout": 1,
        "lopo": True,
        "n_seeds": 1,
        "shuffle_labels": False,
    },
    "synth": {
        "n_subjects": 5,
        "episodes": 80,
        "conditions": ["robot-passive"],
        "snr": 2.0,
        "amplitude": 1.0,
        "p_fail": 0.03,
        "modes": "mixed",
        "noise_sigma": 0.5,
        "k_policies": 10,
        "horizon": None,
        "rest_s": 25.0,
        "pattern_jitter": 1.0,
    },
    "simulate": {
        "domain": "robot",
        "interaction": "passive",
        "episodes": 30,
        "p_fail": 0.02,
        "mode": "worstcase",
        "noise_sigma": 0.5,
        "k_policies": 10,
        "horizon": None,
    },
}

# blocks whose keys are open-ended (checked elsewhere)
_FREE_KEYS = {("model", "params")}
# settings that change where or how fast, never what
VOLATILE = ("out", "threads")


def _merge(base, override, path=()):
    out = copy.deepcopy(base)
    for key, value in override.items():
        where = ".".join(path + (key,))
        if key not in base and path not in _FREE_KEYS:
            raise ValidationError(f"unknown config key {where!r}")
        if isinstance(base.get(key), dict) and path + (key,) not in _FREE_KEYS:
            if not isinstance(value, dict):
                raise ValidationError(f"config key {where!r} must be an object")
            out[key] = _merge(base[key], value, path + (key,))
        elif path + (key,) in _FREE_KEYS:
            if not isinstance(value, dict):
                raise ValidationError(f"config key {where!r} must be an object")
            for kind in value:
                if kind not in KINDS:
                    raise ValidationError(f"unknown config key {where + '.' + kind!r}")
            out[key] = {**base[key], **copy.deepcopy(value)}
        else:
            out[key] = copy.deepcopy(value)
    return out


@dataclass(frozen=True)
class PipelineConfig:
    values: dict

    @classmethod
    def from_dict(cls, d: dict | None = None) -> "PipelineConfig":
        if d is not None and not isinstance(d, dict):
            raise ValidationError("config must be a JSON object")
        cfg = cls(_merge(DEFAULTS, d or {}))
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        try:
            d = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ValidationError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config file {path} is not valid JSON: {exc}") from None
        return cls.from_dict(d)

    def with_overrides(self, overrides: dict) -> "PipelineConfig":
        """Apply dotted-key overrides such as ``{"paradigm.target_subject": "S01"}``."""
        nested = {}
        for dotted, value in overrides.items():
            if value is None:
                continue
            node = nested
            *head, last = dotted.split(".")
            for h in head:
                node = node.setdefault(h, {})
            node[last] = value
        merged = _merge(self.values, nested)
        cfg = PipelineConfig(merged)
        cfg.validate()
        return cfg

    def __getitem__(self, key):
        return self.values[key]

    def validate(self) -> None:
        v = self.values
        if not isinstance(v["seed"], int) or v["seed"] < 0:
            raise ValidationError("config key 'seed' must be a non-negative integer")
        if not isinstance(v["threads"], int) or v["threads"] < 1:
            raise ValidationError("config key 'threads' must be a positive integer")
        self.filter_spec()
        self.window_spec()
        m = v["model"]
        for k in m["kinds"]:
            if k not in KINDS:
                raise ValidationError(f"config key 'model.kinds': unknown kind {k!r}")
        for t in m["tasks"]:
            if t not in TASKS:
                raise ValidationError(f"config key 'model.tasks': unknown task {t!r}")
        for k in m["kinds"]:
            for t in m["tasks"]:
                if not (k == "svm" and t == "regression"):
                    self.model_spec(k, t)
        p = v["paradigm"]
        for name in p["paradigms"]:
            if name not in PARADIGMS:
                raise ValidationError(f"config key 'paradigm.paradigms': unknown paradigm {name!r}")
        if p["condition"] is not None:
            parse_condition(p["condition"])
        if not 0.0 <= float(p["target_fraction"]) < 1.0:
            raise ValidationError("config key 'paradigm.target_fraction' must lie in [0, 1)")
        if p["holdout"] not in (1, 2):
            raise ValidationError("config key 'paradigm.holdout' must be 1 or 2")
        if not isinstance(p["n_seeds"], int) or p["n_seeds"] < 1:
            raise ValidationError("config key 'paradigm.n_seeds' must be a positive integer")
        self.synth_spec()

    def filter_spec(self) -> FilterSpec:
        return FilterSpec.from_config(self.values["filter"])

    def window_spec(self) -> WindowSpec:
        w = self.values["window"]
        return WindowSpec(float(w["length_s"]), float(w["stride_s"]))

    def model_spec(self, kind, task, seed=None) -> ModelSpec:
        params = self.values["model"]["params"].get(kind, {})
        return ModelSpec(kind, task, params, self.values["seed"] if seed is None else seed)

    def seeds(self) -> list:
        base = self.values["seed"]
        return [base + i for i in range(self.values["paradigm"]["n_seeds"])]

    def synth_spec(self) -> SynthSpec:
        s = self.values["synth"]
        conds = tuple(parse_condition(c) for c in s["conditions"])
        return SynthSpec(n_subjects=s["n_subjects"], episodes=s["episodes"], conditions=conds, snr=s["snr"],
                         amplitude=s["amplitude"], p_fail=s["p_fail"], modes=s["modes"],
                         noise_sigma=s["noise_sigma"], k_policies=s["k_policies"], horizon=s["horizon"],
                         rest_s=s["rest_s"], pattern_jitter=s["pattern_jitter"], seed=self.values["seed"])

    def provenance(self) -> dict:
        """The config as echoed into reports: everything except output location and worker count."""
        return {k: copy.deepcopy(v) for k, v in self.values.items() if k not in VOLATILE}

    def to_json(self) -> str:
        return json.dumps(self.values, sort_keys=True, indent=2) + "\n"


__all__ = ["DEFAULTS", "PipelineConfig", "DEFAULT_PARAMS"]
