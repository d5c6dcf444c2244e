"""From trajectories to the skill dataset.

Pipeline: :func:`detect_changes` diffs consecutive observations,
:func:`segment` keeps the events an action actually caused and cuts the four
steps ending at each, :func:`label` names the segment, and :func:`validate`
replays the environment to check the name matches what happened.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from .craftworld import (
    Achievement,
    Action,
    EntityKind,
    InitSpec,
    ItemKind,
    Observation,
    WorldState,
    new_world,
    observe,
    render_text,
    step,
)
from .craftworld.world import PLACEMENTS, RECIPES, StepOutcome
from .explorer import Trajectory, TrajectoryStore
from .io import dumps
from .lexicon import canonicalize, is_skill_id, template_instruction
from .policy.prompts import render_relabel_prompt

log = logging.getLogger(__name__)

SKILLDATA_SCHEMA = "skilldata.v1"
SEGMENT_LEN = 4
# Expected (observation, action) pairs from one 50-episode round: center and relative tolerance.
YIELD_CENTER = 1500
YIELD_TOLERANCE = 0.5

STATUS_CHANGE = "status_change"
INVENTORY_CHANGE = "inventory_change"
ACHIEVEMENT_UNLOCK = "achievement_unlock"
FACING_ENTITY_CHANGE = "facing_entity_change"
EVENT_KINDS = (STATUS_CHANGE, INVENTORY_CHANGE, ACHIEVEMENT_UNLOCK, FACING_ENTITY_CHANGE)

OK = "ok"
INFEASIBLE = "infeasible_instruction"
MISALIGNED = "misaligned_trajectory"
UNPARSEABLE = "unparseable_instruction"
REASONS = (OK, INFEASIBLE, MISALIGNED, UNPARSEABLE)

_ENTITY_NAMES = frozenset(e.value for e in EntityKind)
_A = Achievement


class EmptyInputError(ValueError):
    pass


def _summary(obs: Observation) -> dict:
    return {"status": list(obs.status), "inventory": dict(obs.inventory), "facing": obs.facing[0],
            "entity": _faced_entity(obs)}


def _faced_entity(obs: Observation) -> str | None:
    name = obs.facing[0]
    return name if name in _ENTITY_NAMES else None


@dataclass(frozen=True)
class ChangeEvent:
    t: int
    kinds: tuple[str, ...]
    before: dict = field(compare=False)
    after: dict = field(compare=False)

    @property
    def signature(self) -> tuple:
        """Kinds plus which meters and items moved (and which way) and the faced entities."""
        meters = tuple((i, b > a) for i, (a, b) in enumerate(zip(self.before["status"], self.after["status"]))
                       if a != b)
        inv_b, inv_a = self.before["inventory"], self.after["inventory"]
        items = tuple(sorted((k, inv_a.get(k, 0) > inv_b.get(k, 0)) for k in set(inv_b) | set(inv_a)
                             if inv_b.get(k, 0) != inv_a.get(k, 0)))
        faced = (self.before["entity"], self.after["entity"])
        return self.kinds, meters, items, faced, tuple(self.after.get("unlocked", ()))

    def to_json(self) -> dict:
        return {"t": self.t, "kinds": list(self.kinds), "before": self.before, "after": self.after}


def _diff_kinds(before: Observation, after: Observation, outcome: StepOutcome) -> tuple[str, ...]:
    kinds = []
    if before.status != after.status:
        kinds.append(STATUS_CHANGE)
    if before.inventory != after.inventory:
        kinds.append(INVENTORY_CHANGE)
    if outcome.unlocked:
        kinds.append(ACHIEVEMENT_UNLOCK)
    if _faced_entity(before) != _faced_entity(after):
        kinds.append(FACING_ENTITY_CHANGE)
    return tuple(kinds)


def detect_changes(traj: Trajectory) -> list[ChangeEvent]:
    """One event per changed step, with runs merged into their last step.

    Two events at adjacent steps belong to the same run when the same skill
    caused both (chopping one tree three times) or, for changes no action
    caused, when their change signatures match (a stretch of meter decay).
    """
    events: list[ChangeEvent] = []
    prev_key = None
    for t, st in enumerate(traj.steps):
        before, after = st.obs, traj.obs_at(t + 1)
        kinds = _diff_kinds(before, after, st.outcome)
        if not kinds:
            continue
        post = _summary(after)
        post["unlocked"] = [a.value for a in st.outcome.unlocked]
        post["cause"] = None
        cause = attribute(before, st.action, st.outcome, after)
        if cause is not None:
            post["cause"] = cause.value
        ev = ChangeEvent(t, kinds, _summary(before), post)
        key = ("skill", cause) if cause is not None else ("raw", ev.signature)
        if events and events[-1].t == t - 1 and key == prev_key:
            events[-1] = ev
        else:
            events.append(ev)
        prev_key = key
    return events


def _inv_delta(outcome: StepOutcome) -> dict[str, int]:
    return dict(outcome.inventory_delta)


_HARVEST_BY_FACING = {
    "tree": (ItemKind.WOOD, _A.COLLECT_WOOD),
    "stone": (ItemKind.STONE, _A.COLLECT_STONE),
    "coal": (ItemKind.COAL, _A.COLLECT_COAL),
    "iron": (ItemKind.IRON, _A.COLLECT_IRON),
    "diamond": (ItemKind.DIAMOND, _A.COLLECT_DIAMOND),
    "grass": (ItemKind.SAPLING, _A.COLLECT_SAPLING),
}


def attribute(before: Observation, action: Action, outcome: StepOutcome, after: Observation) -> Achievement | None:
    """The skill an action demonstrably exercised at this step, if any.

    Uses only what the agent can observe: the two observations, the action
    and the reported outcome. Changes with no action-caused effect (meter
    decay, mob damage, passive regeneration, a creature wandering in front of
    the agent) yield ``None``.
    """
    if outcome.unlocked:
        return outcome.unlocked[0]
    action = Action(action)
    dinv = _inv_delta(outcome)
    if action in RECIPES:
        product = RECIPES[action][3]
        return _A(action.value) if dinv.get(product.value, 0) > 0 else None
    if action in PLACEMENTS:
        cost = PLACEMENTS[action][0]
        if all(dinv.get(k.value, 0) < 0 for k in cost):
            return PLACEMENTS[action][3]
        return None
    dstatus = [a - b for a, b in zip(after.status, before.status)]
    if action is Action.SLEEP:
        # a single restful tick is not waking up; the meter has to refill
        return _A.WAKE_UP if dstatus[3] > 0 and after.status[3] == 9 else None
    if action is not Action.DO:
        return None
    facing = before.facing[0]
    if facing in _HARVEST_BY_FACING:
        item, skill = _HARVEST_BY_FACING[facing]
        return skill if dinv.get(item.value, 0) > 0 else None
    if facing == "water":
        return _A.COLLECT_DRINK if dstatus[2] > 0 else None
    if facing == "plant":
        return _A.EAT_PLANT if dstatus[1] > 0 else None
    if facing in _ENTITY_NAMES and after.facing[0] != facing:
        return {"cow": _A.EAT_COW, "zombie": _A.DEFEAT_ZOMBIE, "skeleton": _A.DEFEAT_SKELETON}[facing]
    return None


def attribute_event(traj: Trajectory, event: ChangeEvent) -> Achievement | None:
    cause = event.after.get("cause")
    return Achievement(cause) if cause else None


@dataclass(frozen=True)
class Segment:
    """Up to four (observation text, action) pairs ending at the change step ``t``."""

    steps: tuple[tuple[str, str], ...]
    t: int
    event: ChangeEvent | None
    cause: Achievement | None
    episode: int = 0
    round: int = 0
    seed: int = 0
    init: InitSpec = field(default_factory=InitSpec)
    actions: tuple[str, ...] = ()  # a_0..a_t, for replay

    @property
    def start(self) -> int:
        return self.t - len(self.steps) + 1


def make_segment(traj: Trajectory, t: int, event: ChangeEvent | None = None,
                 cause: Achievement | None = None, length: int = SEGMENT_LEN) -> Segment:
    lo = max(0, t - length + 1)
    pairs = tuple((render_text(traj.steps[i].obs), traj.steps[i].action.value) for i in range(lo, t + 1))
    return Segment(pairs, t, event, cause, traj.episode, traj.round, traj.seed, traj.init,
                   tuple(s.action.value for s in traj.steps[: t + 1]))


def segment(traj: Trajectory) -> list[Segment]:
    """One segment per change event that an action caused."""
    out = []
    for ev in detect_changes(traj):
        cause = attribute_event(traj, ev)
        if cause is None:
            continue
        out.append(make_segment(traj, ev.t, ev, cause))
    return out


@dataclass
class SkillRecord:
    instruction: str
    skill: str | None
    steps: list[tuple[str, str]]
    source: dict
    labeler: str
    replay: dict
    valid: bool | None = None
    reason: str | None = None
    flags: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "schema": SKILLDATA_SCHEMA,
            "instruction": self.instruction,
            "skill": self.skill,
            "steps": [{"obs": o, "action": a} for o, a in self.steps],
            "source": self.source,
            "labeler": self.labeler,
            "replay": self.replay,
            "valid": self.valid,
            "reason": self.reason,
            "flags": list(self.flags),
        }

    @classmethod
    def from_json(cls, d: dict) -> "SkillRecord":
        if d.get("schema", SKILLDATA_SCHEMA) != SKILLDATA_SCHEMA:
            raise ValueError(f"unsupported skill record schema {d.get('schema')!r}")
        return cls(
            instruction=d["instruction"],
            skill=d["skill"],
            steps=[(s["obs"], s["action"]) for s in d["steps"]],
            source=d["source"],
            labeler=d["labeler"],
            replay=d["replay"],
            valid=d["valid"],
            reason=d["reason"],
            flags=list(d.get("flags", [])),
        )

    @property
    def actions(self) -> list[str]:
        return [a for _, a in self.steps]


def _replay_info(seg: Segment) -> dict:
    return {"seed": seg.seed, "init": seg.init.to_json(), "actions": list(seg.actions)}


def _source(seg: Segment) -> dict:
    return {"round": seg.round, "episode": seg.episode, "t": seg.t}


class TemplateLabeler:
    """Deterministic oracle: the attributed skill's frozen instruction."""

    labeler_id = "template"

    def label(self, seg: Segment) -> SkillRecord:
        if not seg.steps:
            raise ValueError("cannot label an empty segment")
        if seg.cause is None:
            raise ValueError(f"segment at t={seg.t} has no action-caused change to label")
        return SkillRecord(template_instruction(seg.cause), seg.cause.value, list(seg.steps),
                           _source(seg), self.labeler_id, _replay_info(seg))


class LlmLabeler:
    """Asks a chat endpoint for a short instruction, then canonicalizes it."""

    labeler_id = "llm"

    def __init__(self, client, max_words: int = 10):
        self.client = client
        self.max_words = max_words

    def label(self, seg: Segment) -> SkillRecord:
        if not seg.steps:
            raise ValueError("cannot label an empty segment")
        flags = []
        try:
            reply = self.client.complete(render_relabel_prompt(seg.steps))
        except Exception as exc:  # keep the record, flag it
            log.warning("relabel call failed: %s", exc)
            reply = ""
            flags.append("label_call_failed")
        text = _first_line(reply)
        skill = canonicalize(text) if text else None
        if skill is None:
            flags.append("label_parse_failed")
        return SkillRecord(text or "<unlabeled>", skill, list(seg.steps), _source(seg),
                           self.labeler_id, _replay_info(seg), flags=flags)


def _first_line(reply: str) -> str:
    for line in (reply or "").splitlines():
        line = line.strip().strip('"').strip()
        if line.lower().startswith("instruction:"):
            line = line.split(":", 1)[1].strip()
        if line:
            return line
    return ""


def label(seg: Segment, labeler=None) -> SkillRecord:
    return (labeler or TemplateLabeler()).label(seg)


@dataclass(frozen=True)
class ValidityVerdict:
    valid: bool
    reason: str

    def __post_init__(self):
        if self.reason not in REASONS or self.valid != (self.reason == OK):
            raise ValueError(f"inconsistent verdict {self.valid}/{self.reason}")


def _demands(skill: Achievement, before: WorldState, action: Action, outcome: StepOutcome,
             after: WorldState) -> bool:
    """Did this transition produce the change the skill's instruction asks for?"""
    if skill in outcome.unlocked:
        return True
    dinv = dict(outcome.inventory_delta)
    fx, fy = before.facing_cell()
    faced = before.entity_at(fx, fy)
    gone = faced is not None and all(e.uid != faced.uid for e in after.entities)
    collect = {_A.COLLECT_WOOD: "wood", _A.COLLECT_STONE: "stone", _A.COLLECT_COAL: "coal",
               _A.COLLECT_IRON: "iron", _A.COLLECT_DIAMOND: "diamond", _A.COLLECT_SAPLING: "sapling"}
    if skill in collect:
        return action is Action.DO and dinv.get(collect[skill], 0) > 0
    if skill is _A.COLLECT_DRINK:
        return action is Action.DO and before.tile(fx, fy).value == "water" and \
            after.status[2] > before.status[2]
    if skill is _A.EAT_PLANT:
        return action is Action.DO and before.tile(fx, fy).value == "plant" and \
            after.tile(fx, fy).value != "plant"
    if skill is _A.WAKE_UP:
        return action is Action.SLEEP and before.status[3] < after.status[3] == 9
    if skill in (_A.EAT_COW, _A.DEFEAT_ZOMBIE, _A.DEFEAT_SKELETON):
        kind = {_A.EAT_COW: EntityKind.COW, _A.DEFEAT_ZOMBIE: EntityKind.ZOMBIE,
                _A.DEFEAT_SKELETON: EntityKind.SKELETON}[skill]
        return action is Action.DO and faced is not None and faced.kind is kind and gone
    act = Action(skill.value) if skill.value in Action._value2member_map_ else None
    if act in PLACEMENTS:
        placed = PLACEMENTS[act][2]
        return action is act and after.tile(fx, fy) is placed and before.tile(fx, fy) is not placed
    if act in RECIPES:
        return action is act and dinv.get(RECIPES[act][3].value, 0) > 0
    return False


def replay(record: SkillRecord) -> tuple[WorldState, Action, StepOutcome, WorldState]:
    """Re-run the record's episode up to its last step; returns (before, a_t, outcome, after)."""
    rp = record.replay
    actions = [Action(a) for a in rp["actions"]]
    if not actions:
        raise ValueError("record has no actions to replay")
    state = new_world(rp["seed"], InitSpec.from_json(rp["init"]))
    for a in actions[:-1]:
        state, _ = step(state, a)
    after, outcome = step(state, actions[-1])
    return state, actions[-1], outcome, after


def validate(record: SkillRecord) -> ValidityVerdict:
    if record.skill is None:
        return ValidityVerdict(False, UNPARSEABLE)
    if not is_skill_id(record.skill):
        return ValidityVerdict(False, INFEASIBLE)
    try:
        before, action, outcome, after = replay(record)
    except Exception as exc:
        log.info("replay failed for %s: %s", record.source, exc)
        return ValidityVerdict(False, MISALIGNED)
    # the segment must be what the environment actually showed and did
    last_obs, last_action = record.steps[-1]
    if last_obs != render_text(observe(before)) or last_action != action.value:
        return ValidityVerdict(False, MISALIGNED)
    if not _demands(Achievement(record.skill), before, action, outcome, after):
        return ValidityVerdict(False, MISALIGNED)
    return ValidityVerdict(True, OK)


def apply_verdict(record: SkillRecord) -> SkillRecord:
    v = validate(record)
    record.valid, record.reason = v.valid, v.reason
    return record


def valid_ratio(records) -> float:
    records = list(records)
    if not records:
        raise EmptyInputError("valid_ratio of an empty record set")
    return sum(1 for r in records if r.reason == OK) / len(records)


def label_store(store: TrajectoryStore, labeler=None) -> list[SkillRecord]:
    labeler = labeler or TemplateLabeler()
    out = []
    for traj in store.trajectories:
        for seg in segment(traj):
            out.append(labeler.label(seg))
    return out


def proposal_records(store: TrajectoryStore) -> list[SkillRecord]:
    """Proposal-first records: the proposal text paired with the episode's last four steps."""
    out = []
    for traj in store.trajectories:
        if not traj.steps or traj.goal is None:
            continue
        seg = make_segment(traj, len(traj.steps) - 1)
        out.append(SkillRecord(traj.goal, canonicalize(traj.goal), list(seg.steps), _source(seg),
                               "proposal", _replay_info(seg)))
    return out


def export_jsonl(records, path: str | Path) -> int:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    n = 0
    tmp = path.with_name(path.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(dumps(r.to_json()) + "\n")
            n += 1
    tmp.replace(path)
    return n


def load_jsonl(path: str | Path) -> list[SkillRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        return [SkillRecord.from_json(json.loads(line)) for line in fh if line.strip()]


def count_pairs(records) -> int:
    return sum(len(r.steps) for r in records)


def yield_band(center: int = YIELD_CENTER, tolerance: float = YIELD_TOLERANCE) -> tuple[int, int]:
    return round(center * (1 - tolerance)), round(center * (1 + tolerance))


def in_yield_band(pairs: int, center: int = YIELD_CENTER, tolerance: float = YIELD_TOLERANCE) -> bool:
    lo, hi = yield_band(center, tolerance)
    return lo <= pairs <= hi
