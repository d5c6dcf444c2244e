"""The iterative loop: explore, label, validate, train, evaluate, feedback.

Every stage writes its artifact under ``<out>/rounds/<k>/`` and records the
artifact hashes in ``stages.json``. A rerun skips stages whose artifacts are
present and hash-match, so an interrupted run resumes with identical results.
The run report is rebuilt from the persisted artifacts alone.
"""
from __future__ import annotations

import logging
import os
from dataclasses import dataclass
from pathlib import Path

from ..evaluator import EvalReport, evaluate
from ..explorer import PROPOSAL_FIRST, RoundConfig, TaskProposer, TrajectoryStore, propose_tasks, run_round
from ..feedback import Feedback, analyze, collect_rollouts, generate_feedback
from ..io import dumps, read_json, sha256_file, write_json
from ..policy.base import EpsilonNoise
from ..policy.bob import BobPolicy
from ..policy.expert import ScriptedExpert, ScriptedExpertConfig, condition_on_feedback
from ..skillgen import (
    LlmLabeler,
    TemplateLabeler,
    apply_verdict,
    count_pairs,
    export_jsonl,
    label_store,
    load_jsonl,
    proposal_records,
    valid_ratio,
)
from ..trainer.model import LinearSoftmaxModel
from ..trainer.sft import assemble_dataset, train
from .config import EF_NO_FEEDBACK, EXIF, PF_BASELINE, SELF_PLAY, ConfigError, RunConfig

log = logging.getLogger(__name__)

REPORT_SCHEMA = "runreport.v1"
STAGES = ("explore", "label", "validate", "train", "eval", "feedback")


class StageError(RuntimeError):
    def __init__(self, stage: str, k: int, cause: BaseException):
        super().__init__(f"stage {stage!r} of iteration {k} failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.k = k
        self.cause = cause


class LockError(RuntimeError):
    pass


class RunLock:
    """Exclusive lockfile for one output root."""

    def __init__(self, root: Path):
        self.path = root / ".lock"

    def __enter__(self):
        self.path.parent.mkdir(parents=True, exist_ok=True)
        try:
            fd = os.open(self.path, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
        except FileExistsError as exc:
            raise LockError(f"{self.path} exists: another run owns this output root "
                            "(remove the file if that run is dead)") from exc
        with os.fdopen(fd, "w") as fh:
            fh.write(f"{os.getpid()}\n")
        return self

    def __exit__(self, *exc):
        self.path.unlink(missing_ok=True)
        return False


@dataclass
class RoundPaths:
    root: Path

    @property
    def trajectories(self) -> Path:
        return self.root / "trajectories"

    @property
    def labeled(self) -> Path:
        return self.root / "labeled.jsonl"

    @property
    def validated(self) -> Path:
        return self.root / "validated.jsonl"

    @property
    def model(self) -> Path:
        return self.root / "model.bobm"

    @property
    def eval(self) -> Path:
        return self.root / "eval.json"

    @property
    def rollouts(self) -> Path:
        return self.root / "rollouts"

    @property
    def feedback(self) -> Path:
        return self.root / "feedback.json"

    @property
    def stages(self) -> Path:
        return self.root / "stages.json"


def _artifact_files(paths: RoundPaths, stage: str) -> list[Path]:
    if stage == "explore":
        return [paths.trajectories / "manifest.json"]
    if stage == "label":
        return [paths.labeled]
    if stage == "validate":
        return [paths.validated]
    if stage == "train":
        return [paths.model]
    if stage == "eval":
        return [paths.eval]
    return [paths.rollouts / "manifest.json", paths.feedback]


class Run:
    def __init__(self, config: RunConfig, out_dir: str | Path):
        self.config = config
        self.root = Path(out_dir)

    # ------------------------------------------------------------ bookkeeping

    def paths(self, k: int) -> RoundPaths:
        return RoundPaths(self.root / "rounds" / str(k))

    def _stage_state(self, k: int) -> dict:
        p = self.paths(k).stages
        return read_json(p) if p.exists() else {}

    def _stage_done(self, k: int, stage: str) -> bool:
        entry = self._stage_state(k).get(stage)
        if entry is None:
            return False
        for rel, digest in entry.items():
            f = self.root / rel
            if not f.exists() or sha256_file(f) != digest:
                log.warning("artifact %s missing or changed; redoing %s of iteration %d", f, stage, k)
                return False
        return True

    def _mark(self, k: int, stage: str) -> None:
        state = self._stage_state(k)
        paths = self.paths(k)
        state[stage] = {str(f.relative_to(self.root)): sha256_file(f) for f in _artifact_files(paths, stage)}
        # anything after a redone stage is stale
        for later in STAGES[STAGES.index(stage) + 1:]:
            state.pop(later, None)
        write_json(paths.stages, state)

    def _check_config(self) -> None:
        p = self.root / "config.json"
        current = self.config.to_json()
        if p.exists():
            saved = read_json(p)
            if dumps(saved) != dumps(current):
                raise ConfigError(f"{p} holds a different configuration; use a fresh output root")
        else:
            write_json(p, current)

    # ------------------------------------------------------------ stage inputs

    def previous_feedback(self, k: int) -> Feedback | None:
        if k == 0 or self.config.mode in (EF_NO_FEEDBACK, PF_BASELINE):
            return None
        return Feedback.load(self.paths(k - 1).feedback)

    def explorer_policy(self, k: int):
        cfg = self.config
        fb = self.previous_feedback(k)
        if cfg.mode == SELF_PLAY:
            if k == 0:
                # an untrained model ties everywhere, so pure noise is the honest start
                return EpsilonNoise(BobPolicy(LinearSoftmaxModel.zeros(cfg.train.dim), "bob0"), 1.0)
            model = LinearSoftmaxModel.load(self.paths(k - 1).model)
            return EpsilonNoise(BobPolicy(model, f"bob{k}"), cfg.self_play_epsilon)
        expert = ScriptedExpertConfig(epsilon=cfg.alice_epsilon, explore_weight=cfg.alice_explore_weight)
        if cfg.mode == EXIF:
            expert = condition_on_feedback(expert, fb, cfg.beta)
        return ScriptedExpert(expert, "alice")

    def round_config(self, k: int) -> RoundConfig:
        cfg = self.config
        fb = self.previous_feedback(k)
        seed = cfg.explore_seed(k)
        kw = dict(policy=self.explorer_policy(k), episodes=cfg.episodes, horizon=cfg.horizon,
                  base_seed=seed, round=k, workers=cfg.workers)
        if fb is not None:
            kw["feedback_id"] = f"round{k - 1}:{','.join(fb.target_skills) or 'none'}"
            kw["feedback"] = fb
            if cfg.mode == SELF_PLAY:
                kw["goal_text"] = fb.next_iteration_advice
        if cfg.mode == PF_BASELINE:
            kw["mode"] = PROPOSAL_FIRST
            kw["proposals"] = propose_tasks(TaskProposer(cfg.pf_infeasible_ratio, seed), cfg.episodes)
        return RoundConfig(**kw)

    def _labeler(self):
        if self.config.labeler == "llm":
            from ..policy.llm import ChatClient, LlmEndpointConfig

            ep = LlmEndpointConfig.from_mapping({**self.config.llm, "template_id": "relabel"})
            return LlmLabeler(ChatClient(ep))
        return TemplateLabeler()

    # ------------------------------------------------------------ stages

    def _run_stage(self, k: int, stage: str, fn) -> None:
        if self._stage_done(k, stage):
            return
        log.info("iteration %d: %s", k, stage)
        try:
            fn()
        except (ConfigError, LockError):
            raise
        except Exception as exc:
            raise StageError(stage, k, exc) from exc
        self._mark(k, stage)

    def iteration(self, k: int) -> None:
        paths = self.paths(k)
        cfg = self.config

        def explore():
            run_round(self.round_config(k), paths.trajectories)

        def label():
            store = TrajectoryStore.load(paths.trajectories)
            recs = proposal_records(store) if cfg.mode == PF_BASELINE else label_store(store, self._labeler())
            export_jsonl(recs, paths.labeled)

        def validate():
            export_jsonl([apply_verdict(r) for r in load_jsonl(paths.labeled)], paths.validated)

        def train_stage():
            rounds = [load_jsonl(self.paths(j).validated) for j in range(k + 1)]
            data = assemble_dataset(rounds, k, cfg.train.data_mode)
            train(cfg.train, data, iteration=k).save(paths.model)

        def eval_stage():
            bob = BobPolicy(LinearSoftmaxModel.load(paths.model), f"bob{k}")
            evaluate(bob, budget=cfg.eval_budget).save(paths.eval)

        def feedback_stage():
            bob = BobPolicy(LinearSoftmaxModel.load(paths.model), f"bob{k}")
            rollouts = collect_rollouts(bob, cfg.rollouts, horizon=cfg.eval_budget)
            TrajectoryStore(k, rollouts, {"kind": "feedback_rollouts", "n": cfg.rollouts}).save(paths.rollouts)
            generate_feedback(analyze(rollouts), k).save(paths.feedback)

        for stage, fn in zip(STAGES, (explore, label, validate, train_stage, eval_stage, feedback_stage)):
            self._run_stage(k, stage, fn)

    # ------------------------------------------------------------ report

    def iteration_summary(self, k: int) -> dict:
        paths = self.paths(k)
        recs = load_jsonl(paths.validated)
        valid = [r for r in recs if r.valid]
        model = LinearSoftmaxModel.load(paths.model)
        rep = EvalReport.load(paths.eval)
        fb = Feedback.load(paths.feedback)
        stages = self._stage_state(k)
        artifacts = {rel: digest for st in STAGES for rel, digest in sorted(stages.get(st, {}).items())}
        return {
            "iteration": k,
            "explore_seed": self.config.explore_seed(k),
            "records": len(recs),
            "valid_records": len(valid),
            "valid_ratio": valid_ratio(recs),
            "pairs": count_pairs(recs),
            "valid_pairs": count_pairs(valid),
            "train_records": model.meta.get("records"),
            "train_decisions": model.meta.get("decisions"),
            "initial_loss": model.meta.get("initial_loss"),
            "final_loss": model.meta.get("final_loss"),
            "ns": rep.ns,
            "ap_mean": rep.ap_mean,
            "ap_stderr": rep.ap_stderr,
            "learned": rep.learned,
            "feedback": {"target_skills": fb.target_skills, "next_iteration_advice": fb.next_iteration_advice,
                         "behavior_analysis": fb.behavior_analysis},
            "artifacts": artifacts,
        }

    def report(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "mode": self.config.mode,
            "config": self.config.to_json(),
            "iterations": [self.iteration_summary(k) for k in range(self.config.iterations)],
        }

    def execute(self, stop_after: int | None = None) -> dict:
        """Run (or resume) all iterations; ``stop_after`` halts after that iteration (for tests)."""
        with RunLock(self.root):
            self._check_config()
            for k in range(self.config.iterations):
                self.iteration(k)
                if stop_after is not None and k >= stop_after:
                    return {}
            report = self.report()
            write_json(self.root / "run_report.json", report)
            return report


def run_loop(config: RunConfig, out_dir: str | Path) -> dict:
    return Run(config, out_dir).execute()


def verify_report(out_dir: str | Path) -> list[str]:
    """Check that every artifact referenced by the run report exists and hash-matches."""
    root = Path(out_dir)
    report = read_json(root / "run_report.json")
    problems = []
    for it in report["iterations"]:
        for rel, digest in it["artifacts"].items():
            f = root / rel
            if not f.exists():
                problems.append(f"missing {rel}")
            elif sha256_file(f) != digest:
                problems.append(f"hash mismatch {rel}")
    return problems
