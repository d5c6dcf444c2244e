"""Command-line interface.

Exit codes: 0 success, 2 configuration or usage error, 3 stage failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from ..evaluator import evaluate
from ..explorer import StoreError, TrajectoryStore, run_round
from ..feedback import Feedback, analyze, collect_rollouts, generate_feedback
from ..policy.bob import BobPolicy
from ..policy.expert import ScriptedExpert, ScriptedExpertConfig
from ..skillgen import TemplateLabeler, apply_verdict, count_pairs, export_jsonl, label_store, load_jsonl, valid_ratio
from ..trainer.model import CheckpointError, LinearSoftmaxModel
from ..trainer.sft import EmptyDatasetError, TrainingDiverged, export_training_file, train
from .compare import compare_modes, format_table
from .config import MODES, ConfigError, load_config
from .loop import LockError, Run, StageError

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_STAGE = 3

log = logging.getLogger("skillloop")


def _config(args):
    cfg = load_config(getattr(args, "config", None))
    over = {}
    if getattr(args, "seed", None) is not None:
        over["master_seed"] = args.seed
    if getattr(args, "mode", None) is not None:
        over["mode"] = args.mode
    if getattr(args, "iterations", None) is not None:
        over["iterations"] = args.iterations
    if getattr(args, "episodes", None) is not None:
        over["episodes"] = args.episodes
    if getattr(args, "data_mode", None) is not None:
        over["data_mode"] = args.data_mode
    return cfg.with_overrides(**over)


def _print_json(obj) -> None:
    print(json.dumps(obj, indent=2, sort_keys=True))


def cmd_explore(args) -> int:
    cfg = _config(args)
    run = Run(cfg, args.out)
    if args.feedback:
        fb = Feedback.load(args.feedback)
        from ..policy.expert import condition_on_feedback

        expert = condition_on_feedback(
            ScriptedExpertConfig(epsilon=cfg.alice_epsilon, explore_weight=cfg.alice_explore_weight), fb, cfg.beta)
        from ..explorer import RoundConfig

        rc = RoundConfig(ScriptedExpert(expert, "alice"), episodes=cfg.episodes, horizon=cfg.horizon,
                         base_seed=cfg.explore_seed(args.round), round=args.round, feedback=fb,
                         feedback_id=f"file:{Path(args.feedback).name}", workers=cfg.workers)
    else:
        rc = run.round_config(args.round) if cfg.mode != "exif" or args.round == 0 else None
        if rc is None:
            raise ConfigError("exploring round > 0 in exif mode needs --feedback")
    store = run_round(rc, args.out)
    counts = store.manifest()["counts"]
    print(f"wrote {len(store.trajectories)} episodes to {args.out} {counts}")
    return EXIT_OK


def cmd_label(args) -> int:
    store = TrajectoryStore.load(args.store)
    recs = label_store(store, TemplateLabeler())
    n = export_jsonl(recs, args.out)
    print(f"labeled {n} segments ({count_pairs(recs)} observation-action pairs) -> {args.out}")
    return EXIT_OK


def cmd_validate(args) -> int:
    recs = [apply_verdict(r) for r in load_jsonl(args.records)]
    export_jsonl(recs, args.out)
    print(f"valid ratio {valid_ratio(recs):.3f} over {len(recs)} records -> {args.out}")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _config(args)
    recs = [r for path in args.records for r in load_jsonl(path) if r.valid is True]
    if not recs:
        raise EmptyDatasetError("no valid records in the given files")
    model = train(cfg.train, recs)
    model.save(args.out)
    print(f"objective {model.meta['initial_loss']:.3f} -> {model.meta['final_loss']:.3f} "
          f"on {model.meta['decisions']} decisions -> {args.out}")
    return EXIT_OK


def _eval_policy(args):
    if args.expert:
        return ScriptedExpert(ScriptedExpertConfig(), "expert")
    if not args.model:
        raise ConfigError("give --model or --expert")
    return BobPolicy(LinearSoftmaxModel.load(args.model))


def cmd_eval(args) -> int:
    rep = evaluate(_eval_policy(args))
    if args.out:
        rep.save(args.out)
    print(rep.table())
    return EXIT_OK


def cmd_feedback(args) -> int:
    rollouts = collect_rollouts(_eval_policy(args), args.rollouts)
    fb = generate_feedback(analyze(rollouts), args.iteration)
    if args.out:
        fb.save(args.out)
    _print_json({"behavior_analysis": fb.behavior_analysis, "next_iteration_advice": fb.next_iteration_advice,
                 "target_skills": fb.target_skills})
    return EXIT_OK


def cmd_loop(args) -> int:
    cfg = _config(args)
    out = Path(args.out)
    if (out / "config.json").exists() and not args.resume:
        raise ConfigError(f"{out} already holds a run; pass --resume to continue it")
    report = Run(cfg, out).execute()
    for it in report["iterations"]:
        print(f"iteration {it['iteration']}: NS {it['ns']}  AP {100 * it['ap_mean']:.1f}%  "
              f"valid {it['valid_ratio']:.2f}  pairs {it['pairs']}  targets {it['feedback']['target_skills']}")
    return EXIT_OK


def cmd_compare(args) -> int:
    cfg = _config(args)
    modes = tuple(args.modes.split(",")) if args.modes else None
    if modes and any(m not in MODES for m in modes):
        raise ConfigError(f"modes must be among {MODES}")
    rows = compare_modes(cfg, args.out, modes or ("exif", "ef_no_feedback", "pf_baseline"),
                         not args.no_non_cumulative)
    print(format_table(rows))
    print(f"table: {Path(args.out) / 'compare.csv'}; figures in {args.out}")
    return EXIT_OK


def cmd_export(args) -> int:
    recs = [r for path in args.records for r in load_jsonl(path) if r.valid is True or args.all]
    n = export_training_file(recs, args.out)
    print(f"exported {n} prompt/completion lines from {len(recs)} records -> {args.out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="skillloop", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, run_flags=True):
        sp.add_argument("--config", help="YAML or JSON run configuration")
        if run_flags:
            sp.add_argument("--seed", type=int, help="master seed")
            sp.add_argument("--mode", choices=MODES)
            sp.add_argument("--iterations", type=int)
            sp.add_argument("--episodes", type=int)
            sp.add_argument("--data-mode", dest="data_mode", choices=("cumulative", "non_cumulative"))

    sp = sub.add_parser("explore", help="run one exploration round")
    common(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--round", type=int, default=0)
    sp.add_argument("--feedback", help="feedback JSON conditioning the explorer")
    sp.set_defaults(fn=cmd_explore)

    sp = sub.add_parser("label", help="segment and label a trajectory store")
    sp.add_argument("--store", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_label)

    sp = sub.add_parser("validate", help="replay-check labeled records")
    sp.add_argument("--records", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_validate)

    sp = sub.add_parser("train", help="train the action model on valid records")
    common(sp)
    sp.add_argument("--records", nargs="+", required=True)
    sp.add_argument("--out", required=True)
    sp.set_defaults(fn=cmd_train)

    for name, fn, help_ in (("eval", cmd_eval, "NS and AP evaluation"),
                            ("feedback", cmd_feedback, "rollouts and rule-based feedback")):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--model")
        sp.add_argument("--expert", action="store_true", help="evaluate the scripted expert instead")
        sp.add_argument("--out")
        if name == "feedback":
            sp.add_argument("--rollouts", type=int, default=20)
            sp.add_argument("--iteration", type=int, default=0)
        sp.set_defaults(fn=fn)

    sp = sub.add_parser("loop", help="run or resume the full iterative loop")
    common(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--resume", action="store_true")
    sp.set_defaults(fn=cmd_loop)

    sp = sub.add_parser("compare", help="compare loop modes; writes compare.csv and figures")
    common(sp)
    sp.add_argument("--out", required=True)
    sp.add_argument("--modes", help="comma-separated subset of modes")
    sp.add_argument("--no-non-cumulative", action="store_true")
    sp.set_defaults(fn=cmd_compare)

    sp = sub.add_parser("export", help="write prompt/completion JSONL for external trainers")
    sp.add_argument("--records", nargs="+", required=True)
    sp.add_argument("--out", required=True)
    sp.add_argument("--all", action="store_true", help="include invalid records")
    sp.set_defaults(fn=cmd_export)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.fn(args)
    except (ConfigError, LockError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (StageError, StoreError, CheckpointError, EmptyDatasetError, TrainingDiverged, OSError,
            ValueError) as exc:
        print(f"stage failure: {exc}", file=sys.stderr)
        return EXIT_STAGE


if __name__ == "__main__":
    sys.exit(main())
