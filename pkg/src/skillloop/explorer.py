"""Exploration rounds: seeded episodes under a policy, persisted as a trajectory store.

Also hosts the proposal-first baseline: a proposer samples task texts (some of
them impossible in this world) and each episode is rolled out with the
proposal as its goal.
"""
from __future__ import annotations

import logging
import random
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .craftworld import (
    Action,
    InitSpec,
    Observation,
    StepOutcome,
    new_world,
    observe,
    randomized_init,
    render_text,
    step,
)
from .io import config_hash, dumps, read_json, sha256_file, write_bytes_atomic, write_json
from .lexicon import parse_skill, pf_catalog
from .policy.base import DEFAULT_HISTORY, PolicyContext

log = logging.getLogger(__name__)

TRAJECTORY_SCHEMA = "trajectory.v1"
MANIFEST_SCHEMA = "trajstore.v1"
EXPLORE_FIRST = "explore_first"
PROPOSAL_FIRST = "proposal_first"
TERMINATIONS = ("horizon", "death", "goal")


@dataclass
class Step:
    obs: Observation
    action: Action
    outcome: StepOutcome

    def to_json(self) -> dict:
        return {"obs": self.obs.to_json(), "action": self.action.value, "outcome": self.outcome.to_json()}

    @classmethod
    def from_json(cls, d: dict) -> "Step":
        return cls(Observation.from_json(d["obs"]), Action(d["action"]), StepOutcome.from_json(d["outcome"]))


@dataclass
class Trajectory:
    """One episode: ``steps[t]`` is (o_t, a_t, outcome of a_t); ``final_obs`` is o_T."""

    episode: int
    seed: int
    init: InitSpec
    steps: list[Step]
    final_obs: Observation
    termination: str
    policy_id: str
    round: int = 0
    goal: str | None = None
    feedback_id: str | None = None
    failed: bool = False
    error: str | None = None

    def __len__(self) -> int:
        return len(self.steps)

    def obs_at(self, t: int) -> Observation:
        """o_t for 0 <= t <= len(self)."""
        return self.final_obs if t == len(self.steps) else self.steps[t].obs

    def unlocked(self) -> set[str]:
        out: set[str] = set()
        for s in self.steps:
            out.update(a.value for a in s.outcome.unlocked)
        return out

    def to_json(self) -> dict:
        return {
            "schema": TRAJECTORY_SCHEMA,
            "episode": self.episode,
            "round": self.round,
            "seed": self.seed,
            "init": self.init.to_json(),
            "goal": self.goal,
            "policy_id": self.policy_id,
            "feedback_id": self.feedback_id,
            "termination": self.termination,
            "failed": self.failed,
            "error": self.error,
            "steps": [s.to_json() for s in self.steps],
            "final_obs": self.final_obs.to_json(),
        }

    @classmethod
    def from_json(cls, d: dict) -> "Trajectory":
        if d.get("schema") != TRAJECTORY_SCHEMA:
            raise ValueError(f"unsupported trajectory schema {d.get('schema')!r}")
        return cls(
            episode=d["episode"],
            seed=d["seed"],
            init=InitSpec.from_json(d["init"]),
            steps=[Step.from_json(s) for s in d["steps"]],
            final_obs=Observation.from_json(d["final_obs"]),
            termination=d["termination"],
            policy_id=d["policy_id"],
            round=d["round"],
            goal=d["goal"],
            feedback_id=d["feedback_id"],
            failed=d["failed"],
            error=d["error"],
        )

    def dumps(self) -> str:
        return dumps(self.to_json())


@dataclass(frozen=True)
class TaskProposal:
    text: str
    feasible: bool


@dataclass
class TaskProposer:
    """Samples proposals from the frozen catalog; ``infeasible_ratio`` of them are impossible."""

    infeasible_ratio: float = 0.7
    seed: int = 0
    feasible: list[str] = field(default_factory=lambda: pf_catalog()[0])
    infeasible: list[str] = field(default_factory=lambda: pf_catalog()[1])

    def __post_init__(self):
        if not 0.0 <= self.infeasible_ratio <= 1.0:
            raise ValueError("infeasible_ratio must lie in [0, 1]")


def propose_tasks(proposer: TaskProposer, n: int) -> list[TaskProposal]:
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = random.Random(proposer.seed)
    out = []
    for _ in range(n):
        if rng.random() < proposer.infeasible_ratio:
            out.append(TaskProposal(rng.choice(proposer.infeasible), False))
        else:
            out.append(TaskProposal(rng.choice(proposer.feasible), True))
    return out


@dataclass
class RoundConfig:
    """One exploration round. ``policy`` must offer ``reset``/``decide``."""

    policy: object
    episodes: int = 50
    horizon: int = 100
    base_seed: int = 1000
    mode: str = EXPLORE_FIRST
    round: int = 0
    proposals: list[TaskProposal] | None = None
    feedback_id: str | None = None
    history: int = DEFAULT_HISTORY
    randomize_init: bool = True
    workers: int = 1
    goal_text: str | None = None
    feedback: object | None = None

    def __post_init__(self):
        if self.episodes < 1:
            raise ValueError("a round needs at least one episode")
        if self.horizon < 0:
            raise ValueError("horizon must be >= 0")
        if self.mode not in (EXPLORE_FIRST, PROPOSAL_FIRST):
            raise ValueError(f"unknown round mode {self.mode!r}")
        if self.mode == PROPOSAL_FIRST and (self.proposals is None or len(self.proposals) < self.episodes):
            raise ValueError("proposal_first needs one proposal per episode")

    def describe(self) -> dict:
        return {
            "policy_id": getattr(self.policy, "policy_id", type(self.policy).__name__),
            "policy_config": _policy_config(self.policy),
            "episodes": self.episodes,
            "horizon": self.horizon,
            "base_seed": self.base_seed,
            "mode": self.mode,
            "round": self.round,
            "proposals": [p.text for p in self.proposals] if self.proposals else None,
            "feedback_id": self.feedback_id,
            "history": self.history,
            "randomize_init": self.randomize_init,
            "goal_text": self.goal_text,
        }


def _policy_config(policy) -> dict | None:
    cfg = getattr(policy, "config", None)
    if cfg is not None and hasattr(cfg, "to_json"):
        return cfg.to_json()
    return None


def episode_seed(config: RoundConfig, index: int) -> int:
    return config.base_seed + index


def run_episode(config: RoundConfig, index: int) -> Trajectory:
    """Roll out episode ``index`` of the round; depends only on (config, index)."""
    seed = episode_seed(config, index)
    spec = randomized_init(seed) if config.randomize_init else InitSpec()
    # proposal-first goals end the episode when reached; a plain goal text does not
    goal = config.proposals[index].text if config.mode == PROPOSAL_FIRST else config.goal_text
    goal_skill = parse_skill(goal) if goal and config.mode == PROPOSAL_FIRST else None
    policy = config.policy
    policy.reset(seed)
    state = new_world(seed, spec)
    ctx = PolicyContext(goal=goal, feedback=config.feedback, max_history=config.history)
    steps: list[Step] = []
    failed, error = False, None
    termination = "horizon"
    while len(steps) < config.horizon and not state.terminal:
        obs = observe(state)
        try:
            action = Action(policy.decide(ctx, obs, state))
        except Exception as exc:  # retained and flagged, never retried
            log.warning("episode %d: policy failed at t=%d: %s", index, state.t, exc)
            failed, error = True, f"{type(exc).__name__}: {exc}"
            break
        state, outcome = step(state, action)
        steps.append(Step(obs, action, outcome))
        ctx.push(render_text(obs), action)
        if goal_skill is not None and goal_skill in outcome.unlocked:
            termination = "goal"
            break
    if state.terminal:
        termination = "death"
    return Trajectory(
        episode=index,
        seed=seed,
        init=spec,
        steps=steps,
        final_obs=observe(state),
        termination=termination,
        policy_id=getattr(policy, "policy_id", type(policy).__name__),
        round=config.round,
        goal=goal,
        feedback_id=config.feedback_id,
        failed=failed,
        error=error,
    )


def _run_one(args):
    config, index = args
    return run_episode(config, index)


def run_round(config: RoundConfig, out_dir: str | Path | None = None) -> "TrajectoryStore":
    """Run all M episodes (gathered in index order) and optionally persist them."""
    indices = range(config.episodes)
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            trajs = list(pool.map(_run_one, [(config, i) for i in indices]))
    else:
        trajs = [run_episode(config, i) for i in indices]
    store = TrajectoryStore(config.round, trajs, config.describe())
    if out_dir is not None:
        store.save(out_dir)
    return store


class StoreError(RuntimeError):
    pass


@dataclass
class TrajectoryStore:
    round: int
    trajectories: list[Trajectory]
    config: dict

    def manifest(self, digests: list[str] | None = None) -> dict:
        counts = {"episodes": len(self.trajectories), "failed": 0}
        for term in TERMINATIONS:
            counts[term] = 0
        entries = []
        for i, tr in enumerate(self.trajectories):
            counts[tr.termination] += 1
            counts["failed"] += int(tr.failed)
            entry = {"index": tr.episode, "seed": tr.seed, "file": f"ep{tr.episode}.json",
                     "length": len(tr), "termination": tr.termination, "failed": tr.failed}
            if digests is not None:
                entry["sha256"] = digests[i]
            entries.append(entry)
        return {
            "schema": MANIFEST_SCHEMA,
            "round": self.round,
            "config": self.config,
            "config_hash": config_hash(self.config),
            "seeds": [tr.seed for tr in self.trajectories],
            "counts": counts,
            "episodes": entries,
        }

    def save(self, out_dir: str | Path) -> Path:
        """Write ``<out_dir>/ep<i>.json`` files then the manifest.

        An ``INCOMPLETE`` marker exists for the duration of the write, so a
        crash leaves a visibly partial store.
        """
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        marker = out / "INCOMPLETE"
        marker.write_text("partial store\n")
        try:
            digests = []
            for tr in self.trajectories:
                digests.append(write_bytes_atomic(out / f"ep{tr.episode}.json",
                                                  (tr.dumps() + "\n").encode("utf-8")))
            write_json(out / "manifest.json", self.manifest(digests))
        except OSError as exc:
            raise StoreError(f"failed to persist round {self.round} to {out}: {exc}") from exc
        marker.unlink()
        return out

    @classmethod
    def load(cls, out_dir: str | Path, verify: bool = True) -> "TrajectoryStore":
        out = Path(out_dir)
        if (out / "INCOMPLETE").exists():
            raise StoreError(f"store at {out} is incomplete")
        man = read_json(out / "manifest.json")
        if man.get("schema") != MANIFEST_SCHEMA:
            raise StoreError(f"unsupported manifest schema {man.get('schema')!r}")
        trajs = []
        for entry in man["episodes"]:
            path = out / entry["file"]
            if verify and sha256_file(path) != entry["sha256"]:
                raise StoreError(f"checksum mismatch for {path}")
            trajs.append(Trajectory.from_json(read_json(path)))
        return cls(man["round"], trajs, man["config"])
