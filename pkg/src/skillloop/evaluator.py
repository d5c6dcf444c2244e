"""Skill-count (NS) and average-progress (AP) evaluation on fixed seeds.

NS: each of the 22 achievements is a task with provisioned prerequisites and
its name as the instruction; a task counts as learned when at least half of
its 10 trials unlock it within the step budget. AP: bare starts with an
open-ended instruction; progress is the share of the 22 achievements unlocked.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from .craftworld import (
    ACHIEVEMENTS,
    Achievement,
    Action,
    InitSpec,
    TileKind,
    check_consistency,
    new_world,
    observe,
    render_text,
    step,
)
from .io import read_json, write_json
from .policy.base import DEFAULT_HISTORY, PolicyContext
from .policy.prompts import OPEN_ENDED_INSTRUCTION

log = logging.getLogger(__name__)

REPORT_SCHEMA = "evalreport.v1"
NS_SEEDS = tuple(42 + i for i in range(10))
AP_SEEDS = tuple(42 + i for i in range(20))
NS_THRESHOLD = 0.5
DEFAULT_BUDGET = 100

_A = Achievement


@dataclass(frozen=True)
class TaskSpec:
    skill: Achievement
    instruction: str
    init: InitSpec
    budget: int = DEFAULT_BUDGET


def task_instruction(skill: Achievement) -> str:
    """The task's name as plain words, e.g. ``"Make stone pickaxe"``."""
    return skill.value.replace("_", " ").capitalize()


_PICK1 = {"wood_pickaxe": 1}
_PICK2 = {"wood_pickaxe": 1, "stone_pickaxe": 1}
_IRON_KIT = {"wood": 1, "coal": 1, "iron": 1, **_PICK2}

# inventory and spawn-side provisioning per task
_PREREQS: dict[Achievement, tuple[dict, tuple[str, ...], tuple[int, int, int, int]]] = {
    _A.COLLECT_SAPLING: ({}, (), (9, 9, 9, 9)),
    _A.PLACE_PLANT: ({"sapling": 1}, (), (9, 9, 9, 9)),
    _A.EAT_PLANT: ({}, (TileKind.PLANT.value,), (9, 9, 9, 9)),
    _A.WAKE_UP: ({}, (), (9, 9, 9, 3)),
    _A.EAT_COW: ({}, ("cow",), (9, 9, 9, 9)),
    _A.COLLECT_DRINK: ({}, (TileKind.WATER.value,), (9, 9, 9, 9)),
    _A.COLLECT_WOOD: ({}, (TileKind.TREE.value,), (9, 9, 9, 9)),
    _A.PLACE_TABLE: ({"wood": 1}, (), (9, 9, 9, 9)),
    _A.MAKE_WOOD_PICKAXE: ({"wood": 1}, (TileKind.TABLE.value,), (9, 9, 9, 9)),
    _A.MAKE_WOOD_SWORD: ({"wood": 1}, (TileKind.TABLE.value,), (9, 9, 9, 9)),
    _A.COLLECT_STONE: (_PICK1, (TileKind.STONE.value,), (9, 9, 9, 9)),
    _A.MAKE_STONE_PICKAXE: ({"wood": 1, "stone": 1, **_PICK1}, (TileKind.TABLE.value,), (9, 9, 9, 9)),
    _A.MAKE_STONE_SWORD: ({"wood": 1, "stone": 1, **_PICK1}, (TileKind.TABLE.value,), (9, 9, 9, 9)),
    _A.PLACE_STONE: ({"stone": 1, **_PICK1}, (), (9, 9, 9, 9)),
    _A.COLLECT_COAL: (_PICK1, (TileKind.COAL.value,), (9, 9, 9, 9)),
    _A.PLACE_FURNACE: ({"stone": 1, **_PICK1}, (TileKind.TABLE.value,), (9, 9, 9, 9)),
    _A.COLLECT_IRON: (_PICK2, (TileKind.IRON.value,), (9, 9, 9, 9)),
    _A.MAKE_IRON_PICKAXE: (_IRON_KIT, (TileKind.TABLE.value, TileKind.FURNACE.value), (9, 9, 9, 9)),
    _A.MAKE_IRON_SWORD: (_IRON_KIT, (TileKind.TABLE.value, TileKind.FURNACE.value), (9, 9, 9, 9)),
    _A.COLLECT_DIAMOND: ({**_PICK2, "iron_pickaxe": 1}, (TileKind.DIAMOND.value,), (9, 9, 9, 9)),
    _A.DEFEAT_SKELETON: ({}, ("skeleton",), (9, 9, 9, 9)),
    _A.DEFEAT_ZOMBIE: ({}, ("zombie",), (9, 9, 9, 9)),
}


def task_specs(budget: int = DEFAULT_BUDGET) -> list[TaskSpec]:
    out = []
    for skill in ACHIEVEMENTS:
        inv, nearby, status = _PREREQS[skill]
        spec = InitSpec.make(inv, status, nearby, "task")
        check_consistency(spec)
        out.append(TaskSpec(skill, task_instruction(skill), spec, budget))
    return out


@dataclass
class TrialLog:
    kind: str  # "ns" or "ap"
    task: str | None
    seed: int
    steps: int
    unlocked: list[str]
    success: bool
    failed: bool = False
    error: str | None = None
    actions: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {"kind": self.kind, "task": self.task, "seed": self.seed, "steps": self.steps,
                "unlocked": list(self.unlocked), "success": self.success, "failed": self.failed,
                "error": self.error, "actions": list(self.actions)}

    @classmethod
    def from_json(cls, d: dict) -> "TrialLog":
        return cls(d["kind"], d["task"], d["seed"], d["steps"], list(d["unlocked"]), d["success"],
                   d["failed"], d["error"], list(d.get("actions", [])))


def run_trial(policy, seed: int, init: InitSpec, instruction: str, budget: int,
              target: Achievement | None = None, history: int = DEFAULT_HISTORY) -> TrialLog:
    """Roll out one evaluation episode; stops early once ``target`` unlocks."""
    policy.reset(seed)
    state = new_world(seed, init)
    ctx = PolicyContext(goal=instruction, max_history=history)
    actions: list[str] = []
    failed, error = False, None
    while len(actions) < budget and not state.terminal:
        obs = observe(state)
        try:
            action = Action(policy.decide(ctx, obs, state))
        except Exception as exc:  # counted as a failed trial, flagged
            failed, error = True, f"{type(exc).__name__}: {exc}"
            log.warning("eval trial seed=%d failed: %s", seed, error)
            break
        state, _ = step(state, action)
        actions.append(action.value)
        ctx.push(render_text(obs), action)
        if target is not None and target in state.unlocked:
            break
    unlocked = [a.value for a in ACHIEVEMENTS if a in state.unlocked]
    success = target is not None and target.value in unlocked and not failed
    return TrialLog("ns" if target is not None else "ap", target.value if target else None, seed,
                    len(actions), unlocked, success, failed, error, actions)


@dataclass
class EvalReport:
    rates: dict[str, float]
    ns: int
    ap_mean: float
    ap_stderr: float
    trials: list[TrialLog]
    ns_seeds: list[int]
    ap_seeds: list[int]
    policy_id: str = ""

    @property
    def learned(self) -> list[str]:
        return [s for s, r in self.rates.items() if r >= NS_THRESHOLD]

    def to_json(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "policy_id": self.policy_id,
            "rates": dict(self.rates),
            "ns": self.ns,
            "ap_mean": self.ap_mean,
            "ap_stderr": self.ap_stderr,
            "ns_seeds": list(self.ns_seeds),
            "ap_seeds": list(self.ap_seeds),
            "trials": [t.to_json() for t in self.trials],
        }

    @classmethod
    def from_json(cls, d: dict) -> "EvalReport":
        if d.get("schema") != REPORT_SCHEMA:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        return cls(dict(d["rates"]), d["ns"], d["ap_mean"], d["ap_stderr"],
                   [TrialLog.from_json(t) for t in d["trials"]], list(d["ns_seeds"]),
                   list(d["ap_seeds"]), d.get("policy_id", ""))

    def save(self, path: str | Path) -> str:
        return write_json(path, self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "EvalReport":
        return cls.from_json(read_json(path))

    def table(self) -> str:
        lines = [f"{'skill':<20} rate", "-" * 26]
        for s, r in self.rates.items():
            mark = "*" if r >= NS_THRESHOLD else " "
            lines.append(f"{s:<20} {r:4.2f}{mark}")
        lines.append("-" * 26)
        lines.append(f"NS = {self.ns}/22   AP = {100 * self.ap_mean:.1f}% +/- {100 * self.ap_stderr:.1f}")
        return "\n".join(lines)


def ns_from_rates(rates: dict[str, float]) -> int:
    return sum(1 for r in rates.values() if r >= NS_THRESHOLD)


def ap_stats(progress) -> tuple[float, float]:
    """Mean and standard error (sample std / sqrt(n)) of per-episode progress.

    Computed in exact rational arithmetic and rounded once, so the result does
    not depend on summation order. Pass ``Fraction`` values for exact input.
    """
    n = len(progress)
    if n == 0:
        return 0.0, 0.0
    xs = [Fraction(p) for p in progress]
    mean = sum(xs, Fraction(0)) / n
    if n == 1:
        return float(mean), 0.0
    var = sum(((x - mean) ** 2 for x in xs), Fraction(0)) / (n - 1)
    return float(mean), math.sqrt(float(var / n))


def eval_ns(policy, seeds=NS_SEEDS, budget: int = DEFAULT_BUDGET,
            tasks: list[TaskSpec] | None = None) -> tuple[dict[str, float], list[TrialLog]]:
    tasks = tasks if tasks is not None else task_specs(budget)
    rates, logs = {}, []
    for task in tasks:
        wins = 0
        for seed in seeds:
            trial = run_trial(policy, seed, task.init, task.instruction, task.budget, task.skill)
            logs.append(trial)
            wins += trial.success
        rates[task.skill.value] = wins / len(seeds)
    return rates, logs


def eval_ap(policy, seeds=AP_SEEDS, horizon: int = DEFAULT_BUDGET,
            instruction: str = OPEN_ENDED_INSTRUCTION) -> tuple[float, float, list[TrialLog]]:
    logs = [run_trial(policy, seed, InitSpec(), instruction, horizon) for seed in seeds]
    mean, se = ap_stats([Fraction(len(t.unlocked), len(ACHIEVEMENTS)) for t in logs])
    return mean, se, logs


def evaluate(policy, ns_seeds=NS_SEEDS, ap_seeds=AP_SEEDS, budget: int = DEFAULT_BUDGET) -> EvalReport:
    rates, ns_logs = eval_ns(policy, ns_seeds, budget)
    ap_mean, ap_se, ap_logs = eval_ap(policy, ap_seeds, budget)
    return EvalReport(rates, ns_from_rates(rates), ap_mean, ap_se, ns_logs + ap_logs,
                      list(ns_seeds), list(ap_seeds), getattr(policy, "policy_id", type(policy).__name__))
