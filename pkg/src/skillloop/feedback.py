"""Feedback from the trained agent's open-ended rollouts to the next exploration round.

The analyzer tallies which achievements the rollouts unlocked and derives the
frontier of the skill tree. The rule-based composer picks up to three target
skills at the highest tier still open and renders advice that begins with
"Focus on". A chat-endpoint composer is available with validation, retries and
a fallback to the rules.
"""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path

from .craftworld import ACHIEVEMENTS, SKILL_PREREQS, TASK_TYPE_OF, Achievement, tier
from .explorer import RoundConfig, Trajectory, run_round
from .io import read_json, write_json
from .policy.prompts import OPEN_ENDED_INSTRUCTION, render_feedback_prompt

log = logging.getLogger(__name__)

FEEDBACK_SCHEMA = "feedback.v1"
ADVICE_PREFIX = "Focus on"
MAX_TARGETS = 3
MASTERED = 0.5
ROLLOUT_SEED = 42
ROLLOUT_HORIZON = 100
TIER_NAMES = ("basic", "wood", "stone", "iron")


class EmptyInputError(ValueError):
    pass


class FeedbackSchemaError(ValueError):
    pass


def collect_rollouts(policy, n: int = 20, base_seed: int = ROLLOUT_SEED, horizon: int = ROLLOUT_HORIZON,
                     instruction: str = OPEN_ENDED_INSTRUCTION) -> list[Trajectory]:
    """Open-ended episodes from a bare start (the same setup as progress evaluation)."""
    if n == 0:
        return []
    cfg = RoundConfig(policy, episodes=n, horizon=horizon, base_seed=base_seed, randomize_init=False,
                      goal_text=instruction)
    return run_round(cfg).trajectories


def _unlock_set(rollout) -> set[str]:
    u = rollout.unlocked
    return set(u() if callable(u) else u)


@dataclass
class SkillHistogram:
    """Per-skill count of rollouts that unlocked it, out of ``attempts`` rollouts."""

    successes: dict[str, int]
    attempts: int

    def __post_init__(self):
        for s, n in self.successes.items():
            if not 0 <= n <= self.attempts:
                raise ValueError(f"successes for {s} outside [0, {self.attempts}]")

    def rate(self, skill: Achievement) -> float:
        return self.successes.get(skill.value, 0) / self.attempts if self.attempts else 0.0

    def achieved(self) -> list[Achievement]:
        return [a for a in ACHIEVEMENTS if self.successes.get(a.value, 0) > 0]

    def mastered(self) -> list[Achievement]:
        return [a for a in ACHIEVEMENTS if self.rate(a) >= MASTERED]

    def unstable(self) -> list[Achievement]:
        return [a for a in ACHIEVEMENTS if 0 < self.rate(a) < MASTERED]

    def frontier(self) -> list[Achievement]:
        """Unachieved skills whose prerequisite skills were all achieved."""
        got = set(self.achieved())
        return [a for a in ACHIEVEMENTS if a not in got and all(p in got for p in SKILL_PREREQS[a])]

    def to_json(self) -> dict:
        return {"successes": {a.value: self.successes.get(a.value, 0) for a in ACHIEVEMENTS},
                "attempts": self.attempts}

    @classmethod
    def from_json(cls, d: dict) -> "SkillHistogram":
        return cls(dict(d["successes"]), d["attempts"])


def analyze(rollouts) -> SkillHistogram:
    """Tally unlocks over rollouts (trajectories or evaluation trial logs)."""
    rollouts = list(rollouts)
    if not rollouts:
        raise EmptyInputError("no rollouts to analyze")
    counts = {a.value: 0 for a in ACHIEVEMENTS}
    for r in rollouts:
        for name in _unlock_set(r):
            counts[name] += 1
    return SkillHistogram(counts, len(rollouts))


@dataclass
class Feedback:
    behavior_analysis: str
    next_iteration_advice: str
    target_skills: list[str]
    iteration: int
    source: str = "rule"
    fallback: bool = False
    histogram: dict | None = field(default=None, repr=False)

    def to_json(self) -> dict:
        return {
            "schema": FEEDBACK_SCHEMA,
            "behavior_analysis": self.behavior_analysis,
            "next_iteration_advice": self.next_iteration_advice,
            "target_skills": list(self.target_skills),
            "iteration": self.iteration,
            "source": self.source,
            "fallback": self.fallback,
            "histogram": self.histogram,
        }

    @classmethod
    def from_json(cls, d: dict) -> "Feedback":
        validate_feedback(d)
        return cls(d["behavior_analysis"], d["next_iteration_advice"], list(d["target_skills"]),
                   d["iteration"], d.get("source", "rule"), d.get("fallback", False), d.get("histogram"))

    def save(self, path: str | Path) -> str:
        return write_json(path, self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "Feedback":
        return cls.from_json(read_json(path))


def validate_feedback(d: dict) -> None:
    """The two-field contract: non-empty analysis, advice starting with "Focus on"."""
    for key in ("behavior_analysis", "next_iteration_advice"):
        if not isinstance(d.get(key), str) or not d[key].strip():
            raise FeedbackSchemaError(f"missing or empty field {key!r}")
    if not d["next_iteration_advice"].strip().startswith(ADVICE_PREFIX):
        raise FeedbackSchemaError(f"advice must start with {ADVICE_PREFIX!r}")
    for s in d.get("target_skills", []):
        if s not in {a.value for a in ACHIEVEMENTS}:
            raise FeedbackSchemaError(f"unknown target skill {s!r}")


def select_targets(hist: SkillHistogram) -> list[Achievement]:
    """Up to three open skills at the highest open tier, weakest first.

    Open skills are the frontier plus achieved-but-unstable ones. Nothing is
    targeted below the highest tier already mastered, so a better histogram
    never moves the advice down the tech tree.
    """
    candidates = set(hist.frontier()) | set(hist.unstable())
    if not candidates:
        return []
    top = max(tier(a) for a in candidates)
    floor = max((tier(a) for a in hist.mastered()), default=0)
    if top < floor:
        return []
    order = {a: i for i, a in enumerate(ACHIEVEMENTS)}
    pool = sorted((a for a in candidates if tier(a) == top), key=lambda a: (hist.rate(a), order[a]))
    return pool[:MAX_TARGETS]


def _words(skill: Achievement) -> str:
    return skill.value.replace("_", " ")


def _join(items: list[str]) -> str:
    if len(items) <= 1:
        return "".join(items)
    return ", ".join(items[:-1]) + " and " + items[-1]


_ADVICE = {
    0: "Focus on {skills} so the basic survival skills become reliable.",
    1: "Focus on gathering wood and crafting at a table, especially {skills}.",
    2: "Focus on practising stone collection and stone tool crafting, especially {skills}.",
    3: "Focus on preparing resources for iron tools, especially {skills}.",
}
_ADVICE_NONE = "Focus on repeating the skills already mastered and surviving longer."


def _analysis(hist: SkillHistogram) -> str:
    mastered = hist.mastered()
    unstable = hist.unstable()
    if not hist.achieved():
        return f"Across {hist.attempts} rollouts the agent unlocked no achievement."
    top = max(tier(a) for a in hist.achieved())
    parts = [f"Across {hist.attempts} rollouts the agent reached the {TIER_NAMES[top]} tier."]
    if mastered:
        parts.append(f"It reliably manages {_join([_words(a) for a in mastered])}.")
    if unstable:
        parts.append(f"It only sometimes manages {_join([_words(a) for a in unstable])}.")
    return " ".join(parts)


def generate_feedback(hist: SkillHistogram, k: int) -> Feedback:
    """Rule-based composer."""
    if hist.attempts <= 0:
        raise EmptyInputError("histogram has no rollouts")
    targets = select_targets(hist)
    if targets:
        advice = _ADVICE[tier(targets[0])].format(skills=_join([_words(a) for a in targets]))
    else:
        advice = _ADVICE_NONE
    fb = Feedback(_analysis(hist), advice, [a.value for a in targets], k, "rule", False, hist.to_json())
    validate_feedback(fb.to_json())
    return fb


def reduced_view(rollouts, limit: int = 40) -> str:
    """Text summary of the steps where status or inventory changed."""
    from .skillgen import detect_changes

    lines = []
    for r in rollouts:
        if not isinstance(r, Trajectory):
            continue
        for ev in detect_changes(r):
            step = r.steps[ev.t]
            lines.append(f"episode {r.episode} t={ev.t}: {step.action.value} -> "
                         f"{', '.join(ev.kinds)}; unlocked {', '.join(ev.after.get('unlocked', [])) or 'nothing'}")
            if len(lines) >= limit:
                return "\n".join(lines)
    return "\n".join(lines) or "No status or inventory changes were observed."


_JSON_BLOCK = re.compile(r"\{.*\}", re.DOTALL)


def parse_feedback_reply(reply: str) -> dict:
    m = _JSON_BLOCK.search(reply or "")
    if m is None:
        raise FeedbackSchemaError("reply contains no JSON object")
    try:
        d = json.loads(m.group(0))
    except json.JSONDecodeError as exc:
        raise FeedbackSchemaError(f"invalid JSON: {exc}") from exc
    if not isinstance(d, dict):
        raise FeedbackSchemaError("reply JSON is not an object")
    validate_feedback({"behavior_analysis": d.get("behavior_analysis"),
                       "next_iteration_advice": d.get("next_iteration_advice")})
    return d


class LlmFeedbackComposer:
    """Asks a chat endpoint for feedback; falls back to the rules after ``retries`` bad replies.

    Target skills always come from the rules: the free-text advice is carried
    verbatim for prompt insertion only.
    """

    def __init__(self, client, retries: int = 2):
        self.client = client
        self.retries = retries

    def compose(self, rollouts, k: int) -> Feedback:
        rollouts = list(rollouts)
        hist = analyze(rollouts)
        rule = generate_feedback(hist, k)
        messages = render_feedback_prompt(reduced_view(rollouts))
        for attempt in range(self.retries + 1):
            try:
                d = parse_feedback_reply(self.client.complete(messages))
            except FeedbackSchemaError as exc:
                log.warning("feedback reply rejected (attempt %d): %s", attempt + 1, exc)
                continue
            except Exception as exc:  # endpoint failure: take the fallback path
                log.warning("feedback endpoint failed: %s", exc)
                break
            return Feedback(d["behavior_analysis"].strip(), d["next_iteration_advice"].strip(),
                            rule.target_skills, k, "llm", False, hist.to_json())
        rule.fallback = True
        return rule


def skill_types(feedback: Feedback) -> list[str]:
    return [TASK_TYPE_OF[Achievement(s)] for s in feedback.target_skills]
