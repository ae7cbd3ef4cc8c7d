"""Command-line entry point.

Every subcommand reads the same JSON config (``--config``), applies flag
overrides, and writes its products under ``--out``. Exit status is 0 on
success, 1 for invalid input or configuration, 2 for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .agreement import export_agreement_heatmap
from .config import PipelineConfig
from .data import load_dataset, parse_condition, save_task_csv
from .domains import make_domain
from .errors import NeuroloopError, ValidationError
from .evaluation import PARADIGMS, ParadigmSpec, balance_table, build_tables, run_evaluation
from .features import FeatureTable, featurize_demonstration
from .learners import KINDS, save_model, train_model
from .synth import generate_cohort, synthesize
from .trajectory import build_ensemble, simulate_task

log = logging.getLogger("neuroloop")

THREADS_ENV = "NEUROLOOP_THREADS"


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _common(p):
    p.add_argument("--config", help="JSON config file (unknown keys are rejected)")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--out", help="output directory")
    p.add_argument("--threads", type=int, help=f"worker threads (falls back to ${THREADS_ENV})")
    p.add_argument("--subjects", type=int, help="number of synthetic subjects")
    p.add_argument("--condition", help="condition filter such as robot-passive")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")


def _model_flags(p):
    p.add_argument("--paradigm", choices=PARADIGMS)
    p.add_argument("--model", choices=KINDS)
    p.add_argument("--target-subject")
    p.add_argument("--target-fraction", type=float)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="neuroloop", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True
    helps = {
        "synth": "generate a synthetic cohort on disk",
        "simulate": "simulate degraded episodes and export the agreement heatmap",
        "features": "preprocess, window and label every demonstration",
        "train": "run one paradigm with one model kind",
        "evaluate": "run every configured paradigm and model kind",
        "lopo": "leave-subjects-out cross validation",
        "finetune": "fine-tune pooled models on target subjects",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, description=text)
        _common(p)
        if name in ("train", "evaluate", "lopo", "finetune"):
            _model_flags(p)
    return parser


def _threads(args, cfg):
    if args.threads is not None:
        return args.threads
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return int(env)
        except ValueError:
            raise ValidationError(f"${THREADS_ENV} must be an integer, got {env!r}") from None
    return cfg["threads"]


def resolve_config(args) -> PipelineConfig:
    cfg = PipelineConfig.load(args.config) if args.config else PipelineConfig.from_dict()
    over = {"seed": args.seed, "out": args.out, "synth.n_subjects": args.subjects,
            "paradigm.condition": args.condition}
    if getattr(args, "target_subject", None) is not None:
        over["paradigm.target_subject"] = args.target_subject
    if getattr(args, "target_fraction", None) is not None:
        over["paradigm.target_fraction"] = args.target_fraction
    if getattr(args, "model", None) is not None:
        over["model.kinds"] = [args.model]
    if getattr(args, "paradigm", None) is not None:
        over["paradigm.paradigms"] = [args.paradigm]
    cfg = cfg.with_overrides(over)
    threads = _threads(args, cfg)
    if threads < 1:
        raise ValidationError("--threads must be >= 1")
    return cfg.with_overrides({"threads": threads})


def _out_dir(cfg) -> Path:
    out = Path(cfg["out"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _demos(cfg):
    """Demonstrations from ``dataset`` or, when unset, an in-memory synthetic cohort."""
    cond = cfg["paradigm"]["condition"]
    conditions = None if cond is None else [parse_condition(cond)]
    if cfg["dataset"]:
        return load_dataset(cfg["dataset"], conditions)
    log.info("no dataset configured; synthesizing %d subjects", cfg["synth"]["n_subjects"])
    return [d for d, _ in synthesize(cfg.synth_spec())]


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_synth(cfg, args):
    out = _out_dir(cfg)
    manifest = generate_cohort(cfg.synth_spec(), out)
    print(f"wrote {len(manifest.entries)} demonstrations to {out}")


def cmd_simulate(cfg, args):
    out = _out_dir(cfg)
    sim = cfg["simulate"]
    domain_name, interaction = sim["domain"], sim["interaction"]
    if cfg["paradigm"]["condition"]:
        domain_name, interaction = parse_condition(cfg["paradigm"]["condition"])
    kw = {} if sim["horizon"] is None else {"horizon": sim["horizon"]}
    domain = make_domain(domain_name, **kw)
    root = np.random.SeedSequence(cfg["seed"])
    ens_seed, run_seed = root.spawn(2)
    ensemble = build_ensemble(domain, sim["k_policies"], rng=np.random.default_rng(ens_seed))
    task, episodes = simulate_task(domain, ensemble, sim["episodes"], np.random.default_rng(run_seed),
                                   p_fail=sim["p_fail"], modes=sim["mode"], noise_sigma=sim["noise_sigma"],
                                   interaction=interaction)
    save_task_csv(task, out / "task.csv")
    export_agreement_heatmap(task, path=out / "heatmap.csv")
    summary = {
        "config": cfg.provenance(),
        "episodes": [{"episode": i, "steps": len(e.steps), "t_star": e.t_star, "mode": e.mode,
                      "success": e.success, "reward": e.reward} for i, e in enumerate(episodes)],
    }
    _write_json(out / "episodes.json", summary)
    print(f"simulated {len(episodes)} episodes of {domain_name}; heatmap at {out / 'heatmap.csv'}")


def cmd_features(cfg, args):
    out = _out_dir(cfg) / "features"
    out.mkdir(exist_ok=True)
    index = []
    for demo in _demos(cfg):
        table = featurize_demonstration(demo, cfg.window_spec(), cfg.filter_spec())
        cond = f"{demo.task.domain}-{demo.task.interaction}"
        name = f"{demo.subject_id}_{cond}_{demo.session}.csv"
        table.to_csv(out / name)
        index.append({"file": name, "subject": demo.subject_id, "condition": cond, "session": demo.session,
                      "windows": len(table), "dropped": dict(sorted(table.dropped.items()))})
    _write_json(out / "index.json", {"config": cfg.provenance(), "tables": index})
    print(f"wrote {len(index)} feature tables to {out}")


def _paradigm_specs(cfg, names, lopo=True, pooled=True):
    p = cfg["paradigm"]
    return [ParadigmSpec(name, condition=p["condition"], target_subject=p["target_subject"],
                         target_fraction=float(p["target_fraction"]), holdout=p["holdout"],
                         lopo=lopo and p["lopo"], pooled=pooled, shuffle_labels=p["shuffle_labels"])
            for name in names]


def _run_report(cfg, paradigms, label):
    tables = build_tables(_demos(cfg), cfg.window_spec(), cfg.filter_spec(), cfg["paradigm"]["condition"])
    kinds = cfg["model"]["kinds"]
    tasks = cfg["model"]["tasks"]
    specs = {k: cfg.model_spec(k, "binary" if k == "svm" else tasks[0]) for k in kinds}
    report = run_evaluation(tables, paradigms, specs, tasks, cfg.seeds(), cfg["threads"],
                            {"command": label, **cfg.provenance()})
    paths = report.write(_out_dir(cfg))
    print(f"report written to {paths['json']}")
    return tables, report


def cmd_train(cfg, args):
    names = cfg["paradigm"]["paradigms"]
    if len(names) != 1 or len(cfg["model"]["kinds"]) != 1:
        raise ValidationError("train runs one paradigm and one model kind: pass --paradigm and --model "
                              "or configure exactly one of each")
    if names[0] == "fine_tuned" and not cfg["paradigm"]["target_subject"]:
        raise ValidationError("fine_tuned training needs 'paradigm.target_subject' (--target-subject)")
    tables, _ = _run_report(cfg, _paradigm_specs(cfg, names), "train")
    # also keep a model fitted on all balanced windows for reuse
    kind = cfg["model"]["kinds"][0]
    pooled = FeatureTable.concat(list(tables.values()))
    models_dir = _out_dir(cfg) / "models"
    models_dir.mkdir(exist_ok=True)
    for task in cfg["model"]["tasks"]:
        if kind == "svm" and task == "regression":
            continue
        bal = balance_table(pooled, task, cfg["seed"])
        y = bal.labels(task)
        model = train_model(cfg.model_spec(kind, task), bal.X, y, threads=cfg["threads"])
        save_model(model, models_dir / f"{kind}_{task}.json")


def cmd_evaluate(cfg, args):
    _run_report(cfg, _paradigm_specs(cfg, cfg["paradigm"]["paradigms"]), "evaluate")


def cmd_lopo(cfg, args):
    _run_report(cfg, _paradigm_specs(cfg, ["multi_subject"], lopo=True, pooled=False), "lopo")


def cmd_finetune(cfg, args):
    _run_report(cfg, _paradigm_specs(cfg, ["fine_tuned"]), "finetune")


COMMANDS = {"synth": cmd_synth, "simulate": cmd_simulate, "features": cmd_features, "train": cmd_train,
            "evaluate": cmd_evaluate, "lopo": cmd_lopo, "finetune": cmd_finetune}


def _setup_logging(verbose):
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if verbose else logging.INFO,
        format="level=%(levelname)s logger=%(name)s msg=%(message)s",
        force=True,
    )


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        _setup_logging(args.verbose)
        cfg = resolve_config(args)
        COMMANDS[args.command](cfg, args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NeuroloopError, OSError, RuntimeError, ArithmeticError) as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2
    return 0


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
