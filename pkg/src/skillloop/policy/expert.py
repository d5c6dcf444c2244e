"""Scripted goal-stack expert: a full-state oracle standing in for an LLM explorer.

Each step it walks the skills in weight order, skips those already unlocked
this episode, and returns the first action its planner can produce for one
of them. Planning recurses through prerequisites (no pickaxe -> make one ->
no table -> place one -> no wood -> chop a tree) and navigates with a
breadth-first search limited to ``horizon`` steps.
"""
from __future__ import annotations

import math
import random
from collections import deque
from dataclasses import dataclass, replace

from ..craftworld import rng as _rng
from ..craftworld.kinds import (
    ACHIEVEMENTS,
    ACTIONS,
    MOVES,
    PLACEABLE,
    TASK_TYPE_OF,
    Achievement,
    Action,
    Direction,
    EntityKind,
    ItemKind,
    TileKind,
)
from ..craftworld.world import PLACEMENTS, RECIPES, WorldState
from ..craftworld.worldgen import TILE_CODES
from ..lexicon import parse_skill
from .base import PolicyContext

A = Achievement

# Survival skills first, the tool ladder after, combat last.
BASELINE_TYPE_WEIGHTS = {
    "Harvest": 1.0,
    "Status": 1.0,
    "Wood": 0.6,
    "Stone": 0.3,
    "Iron": 0.25,
    "Hunt": 0.25,
}
DEFAULT_BOOST = 5.0
SURVIVAL_THRESHOLD = 3


def baseline_weights() -> dict[Achievement, float]:
    """Per-skill baseline weights, normalized to sum to one."""
    raw = {a: BASELINE_TYPE_WEIGHTS[TASK_TYPE_OF[a]] for a in ACHIEVEMENTS}
    total = sum(raw.values())
    return {a: w / total for a, w in raw.items()}


@dataclass(frozen=True)
class ScriptedExpertConfig:
    """Skill weights (canonical order), per-step noise and BFS radius.

    ``priority`` is ``"greedy"`` (always the heaviest unmet skill) or
    ``"sampled"`` (a weighted random order redrawn every ``commit`` steps and
    after every unlock, so weights shape how often each skill is pursued).
    ``explore_weight`` enters the same race as a pseudo-skill: when it wins,
    the expert roams for the window instead of pursuing a skill.
    """

    weights: tuple[float, ...] = tuple(baseline_weights()[a] for a in ACHIEVEMENTS)
    epsilon: float = 0.0
    horizon: int = 20
    priority: str = "sampled"
    commit: int = 25
    explore_weight: float = 0.0

    def __post_init__(self):
        if len(self.weights) != len(ACHIEVEMENTS):
            raise ValueError("need one weight per achievement")
        if any(w < 0 for w in self.weights) or not any(w > 0 for w in self.weights):
            raise ValueError("weights must be non-negative and not all zero")
        if not 0.0 <= self.epsilon <= 1.0:
            raise ValueError("epsilon must lie in [0, 1]")
        if self.priority not in ("greedy", "sampled"):
            raise ValueError(f"unknown priority rule {self.priority!r}")
        if self.commit < 1:
            raise ValueError("commit must be >= 1")
        if self.explore_weight < 0:
            raise ValueError("explore_weight must be >= 0")

    @classmethod
    def from_weights(cls, weights: dict, epsilon: float = 0.0, horizon: int = 20,
                     priority: str = "sampled", commit: int = 25,
                     explore_weight: float = 0.0) -> "ScriptedExpertConfig":
        return cls(tuple(float(weights.get(a, weights.get(a.value, 0.0))) for a in ACHIEVEMENTS),
                   epsilon, horizon, priority, commit, explore_weight)

    def weight(self, skill: Achievement) -> float:
        return self.weights[ACHIEVEMENTS.index(Achievement(skill))]

    def weight_map(self) -> dict[Achievement, float]:
        return dict(zip(ACHIEVEMENTS, self.weights))

    def to_json(self) -> dict:
        return {"weights": {a.value: w for a, w in zip(ACHIEVEMENTS, self.weights)},
                "epsilon": self.epsilon, "horizon": self.horizon, "priority": self.priority,
                "commit": self.commit, "explore_weight": self.explore_weight}

    @classmethod
    def from_json(cls, d: dict) -> "ScriptedExpertConfig":
        return cls.from_weights(d["weights"], d.get("epsilon", 0.0), d.get("horizon", 20),
                                d.get("priority", "sampled"), d.get("commit", 25),
                                d.get("explore_weight", 0.0))


# Roaming share for the exploration explorer. Calibrated so a 50-episode round
# yields on the order of 1500 (observation, action) pairs.
ALICE_EXPLORE_WEIGHT = 0.3


def alice_config(epsilon: float = 0.0) -> ScriptedExpertConfig:
    """The explorer's default configuration: baseline weights plus roaming."""
    return ScriptedExpertConfig(epsilon=epsilon, explore_weight=ALICE_EXPLORE_WEIGHT)


def condition_on_feedback(config: ScriptedExpertConfig, feedback, beta: float = DEFAULT_BOOST,
                          normalize: bool = True) -> ScriptedExpertConfig:
    """Multiply the weight of every feedback target by ``beta``, then rescale to sum 1.

    A feedback without targets (or ``None``) leaves the config untouched.
    """
    targets = list(getattr(feedback, "target_skills", None) or []) if feedback is not None else []
    if not targets:
        return config
    boost = {Achievement(t) for t in targets}
    w = [x * beta if a in boost else x for a, x in zip(ACHIEVEMENTS, config.weights)]
    if normalize:
        total = sum(w)
        w = [x / total for x in w]
    return replace(config, weights=tuple(w))


_T = TILE_CODES
_WALK = frozenset(_T[k] for k in (TileKind.GRASS, TileKind.SAND, TileKind.PATH))
_PLACE = frozenset(_T[k] for k in PLACEABLE)
_DIRS = (Direction.NORTH, Direction.EAST, Direction.SOUTH, Direction.WEST)
_MOVE_OF = {d: a for a, d in MOVES.items()}
_TOOL_SKILL = {
    ItemKind.WOOD_PICKAXE: A.MAKE_WOOD_PICKAXE,
    ItemKind.STONE_PICKAXE: A.MAKE_STONE_PICKAXE,
    ItemKind.IRON_PICKAXE: A.MAKE_IRON_PICKAXE,
}
_COLLECT_SKILL = {
    ItemKind.WOOD: A.COLLECT_WOOD,
    ItemKind.STONE: A.COLLECT_STONE,
    ItemKind.COAL: A.COLLECT_COAL,
    ItemKind.IRON: A.COLLECT_IRON,
    ItemKind.DIAMOND: A.COLLECT_DIAMOND,
    ItemKind.SAPLING: A.COLLECT_SAPLING,
}
_MINE = {  # skill -> (tile, pickaxe needed)
    A.COLLECT_WOOD: (TileKind.TREE, None),
    A.COLLECT_STONE: (TileKind.STONE, ItemKind.WOOD_PICKAXE),
    A.COLLECT_COAL: (TileKind.COAL, ItemKind.WOOD_PICKAXE),
    A.COLLECT_IRON: (TileKind.IRON, ItemKind.STONE_PICKAXE),
    A.COLLECT_DIAMOND: (TileKind.DIAMOND, ItemKind.IRON_PICKAXE),
}


class _Planner:
    """One decision's worth of planning over a fixed state."""

    def __init__(self, state: WorldState, horizon: int):
        self.s = state
        self.horizon = horizon
        self.mobs = {(e.x, e.y): e.kind for e in state.entities}
        self._bfs = None
        self._depth = 0

    # -- navigation
    def bfs(self):
        if self._bfs is None:
            terrain = self.s.terrain
            start = self.s.pos
            parent = {start: None}
            order = [start]
            q = deque([(start, 0)])
            size = terrain.shape[0]
            while q:
                (x, y), d = q.popleft()
                if d >= self.horizon:
                    continue
                for dr in _DIRS:
                    dx, dy = dr.delta
                    n = (x + dx, y + dy)
                    if n in parent or not (0 < n[0] < size - 1 and 0 < n[1] < size - 1):
                        continue
                    if terrain[n[1], n[0]] in _WALK and n not in self.mobs:
                        parent[n] = (x, y)
                        order.append(n)
                        q.append((n, d + 1))
            self._bfs = (order, parent)
        return self._bfs

    def _first_move(self, target) -> Action:
        _, parent = self.bfs()
        cell = target
        while parent[cell] != self.s.pos:
            cell = parent[cell]
        dx, dy = cell[0] - self.s.pos[0], cell[1] - self.s.pos[1]
        for dr in _DIRS:
            if dr.delta == (dx, dy):
                return _MOVE_OF[dr]
        raise AssertionError("non-adjacent path step")

    def _kind_at(self, x, y):
        mob = self.mobs.get((x, y))
        if mob is not None:
            return mob
        return TileKind(self.s.tile(x, y))

    def interact(self, kind, action: Action = Action.DO):
        """Face a (non-walkable) cell holding ``kind`` and apply ``action``."""
        order, _ = self.bfs()
        fx, fy = self.s.facing_cell()
        if self._kind_at(fx, fy) is kind:
            return action
        for cell in order:
            for dr in _DIRS:
                dx, dy = dr.delta
                nx, ny = cell[0] + dx, cell[1] + dy
                if self._kind_at(nx, ny) is kind:
                    if cell == self.s.pos:
                        return _MOVE_OF[dr]
                    return self._first_move(cell)
        return None

    def near(self, kinds: tuple[TileKind, ...]):
        """Move to a cell with every kind in ``kinds`` within Chebyshev distance 1."""
        codes = [_T[k] for k in kinds]
        terrain = self.s.terrain
        order, _ = self.bfs()
        for cell in order:
            x, y = cell
            sub = terrain[y - 1:y + 2, x - 1:x + 2]
            if all((sub == c).any() for c in codes):
                return "here" if cell == self.s.pos else self._first_move(cell)
        return None

    def place(self, action: Action):
        """Face a free placeable cell and apply ``action``."""
        fx, fy = self.s.facing_cell()
        if self.s.terrain[fy, fx] in _PLACE and (fx, fy) not in self.mobs:
            return action
        px, py = self.s.pos
        for dr in _DIRS:
            dx, dy = dr.delta
            c = (px + dx, py + dy)
            if self.s.terrain[c[1], c[0]] in _PLACE and c not in self.mobs:
                if self.s.terrain[c[1], c[0]] not in _WALK:
                    return _MOVE_OF[dr]
                # stepping onto c; we then face the cell beyond it
                beyond = (c[0] + dx, c[1] + dy)
                if self.s.terrain[beyond[1], beyond[0]] in _PLACE and beyond not in self.mobs:
                    return _MOVE_OF[dr]
        for dr in _DIRS:
            dx, dy = dr.delta
            c = (px + dx, py + dy)
            if self.s.terrain[c[1], c[0]] in _WALK and c not in self.mobs:
                return _MOVE_OF[dr]
        return None

    # -- skills
    def plan(self, skill: Achievement):
        self._depth += 1
        try:
            if self._depth > 8:
                return None
            return self._plan(skill)
        finally:
            self._depth -= 1

    def _has(self, item: ItemKind, n: int = 1) -> bool:
        return self.s.item(item) >= n

    def _ensure(self, item: ItemKind, n: int = 1):
        """Action towards holding ``n`` of ``item`` (None when already held)."""
        if self._has(item, n):
            return None
        if item in _TOOL_SKILL:
            return self.plan(_TOOL_SKILL[item]) or "blocked"
        return self.plan(_COLLECT_SKILL[item]) or "blocked"

    def _craft(self, action: Action):
        cost, need_table, need_furnace, _ = RECIPES[action]
        reserve = 1 if need_table else 0
        for item, n in cost.items():
            step = self._ensure(item, n)
            if step is not None:
                return None if step == "blocked" else step
        if need_furnace:
            go = self.near((TileKind.TABLE, TileKind.FURNACE))
            if go == "here":
                return action
            if go is not None:
                return go
            return self._station(TileKind.FURNACE)
        go = self.near((TileKind.TABLE,))
        if go == "here":
            return action
        if go is not None:
            return go
        step = self._ensure(ItemKind.WOOD, cost.get(ItemKind.WOOD, 0) + reserve)
        if step is not None:
            return None if step == "blocked" else step
        return self.place(Action.PLACE_TABLE)

    def _station(self, kind: TileKind):
        """Build the missing table or furnace next to the agent."""
        if kind is TileKind.TABLE:
            step = self._ensure(ItemKind.WOOD, 1)
            if step is not None:
                return None if step == "blocked" else step
            return self.place(Action.PLACE_TABLE)
        # furnace: needs a table nearby and one stone
        go = self.near((TileKind.TABLE,))
        if go is None:
            return self._station(TileKind.TABLE)
        if go != "here":
            return go
        step = self._ensure(ItemKind.STONE, 1)
        if step is not None:
            return None if step == "blocked" else step
        return self.place(Action.PLACE_FURNACE)

    def _plan(self, skill: Achievement):
        s = self.s
        if skill in _MINE:
            tile, tool = _MINE[skill]
            if tool is not None:
                step = self._ensure(tool)
                if step is not None:
                    return None if step == "blocked" else step
            return self.interact(tile)
        if skill is A.COLLECT_SAPLING:
            fx, fy = s.facing_cell()
            if s.tile(fx, fy) is TileKind.GRASS and (fx, fy) not in self.mobs:
                return Action.DO
            px, py = s.pos
            for dr in _DIRS:
                dx, dy = dr.delta
                if s.tile(px + dx, py + dy) is TileKind.GRASS and (px + dx, py + dy) not in self.mobs:
                    return _MOVE_OF[dr]
            return None
        if skill is A.PLACE_PLANT:
            step = self._ensure(ItemKind.SAPLING)
            if step is not None:
                return None if step == "blocked" else step
            return self.place(Action.PLACE_PLANT)
        if skill is A.EAT_PLANT:
            return self.interact(TileKind.PLANT)
        if skill is A.WAKE_UP:
            return Action.SLEEP if s.status[3] < 9 else None
        if skill is A.EAT_COW:
            return self.interact(EntityKind.COW)
        if skill is A.COLLECT_DRINK:
            return self.interact(TileKind.WATER)
        if skill is A.DEFEAT_ZOMBIE:
            return self.interact(EntityKind.ZOMBIE)
        if skill is A.DEFEAT_SKELETON:
            return self.interact(EntityKind.SKELETON)
        if skill is A.PLACE_TABLE:
            return self._station(TileKind.TABLE)
        if skill is A.PLACE_FURNACE:
            return self._station(TileKind.FURNACE)
        if skill is A.PLACE_STONE:
            step = self._ensure(ItemKind.STONE)
            if step is not None:
                return None if step == "blocked" else step
            return self.place(Action.PLACE_STONE)
        action = Action(skill.value)
        if action in RECIPES:
            return self._craft(action)
        return None


class ScriptedExpert:
    """Deterministic (at epsilon 0) oracle explorer.

    A parseable goal in the context is pursued before anything else; any other
    goal text falls back to the weight order.
    """

    def __init__(self, config: ScriptedExpertConfig | None = None, policy_id: str = "scripted"):
        self.config = config or ScriptedExpertConfig()
        self.policy_id = policy_id
        self._rng = random.Random(0)
        self._order = self._priority(self.config)

    @staticmethod
    def _priority(config: ScriptedExpertConfig) -> list[Achievement]:
        idx = sorted(range(len(ACHIEVEMENTS)), key=lambda i: (-config.weights[i], i))
        return [ACHIEVEMENTS[i] for i in idx if config.weights[i] > 0]

    def reset(self, episode_seed: int) -> None:
        self._rng = random.Random(episode_seed * 7919 + 17)

    def decide(self, context: PolicyContext, obs, state: WorldState | None = None) -> Action:
        if state is None:
            raise ValueError("the scripted expert needs the full world state")
        eps = self.config.epsilon
        if eps > 0 and (eps >= 1.0 or self._rng.random() < eps):
            return ACTIONS[self._rng.randrange(len(ACTIONS))]
        return self.plan_action(state, context.goal if context else None)

    def plan_action(self, state: WorldState, goal: str | None = None) -> Action:
        planner = _Planner(state, self.config.horizon)
        goal_skill = parse_skill(goal) if goal else None
        if goal_skill is not None and goal_skill not in state.unlocked:
            a = planner.plan(goal_skill)
            if a is not None:
                return a
        a = self._survive(planner, state)
        if a is not None:
            return a
        for skill in self.priority_order(state):
            if skill is None:
                break  # the roaming pseudo-goal won this window
            a = planner.plan(skill)
            if a is not None:
                return a
        return self._wander(state)

    def priority_order(self, state: WorldState) -> list[Achievement | None]:
        """Unmet skills in the order they will be tried at this state.

        ``None`` marks the roaming pseudo-goal; skills after it are not tried.
        """
        if self.config.priority == "greedy":
            return [a for a in self._order if a not in state.unlocked]
        # exponential race: skill i wins with probability w_i / sum(w); the draw is
        # keyed on the state so it stays fixed until an unlock or a new window
        window = state.t // self.config.commit
        keys = []
        for i, skill in enumerate(ACHIEVEMENTS):
            w = self.config.weights[i]
            if w <= 0 or skill in state.unlocked:
                continue
            u = _rng.uniform(state.seed, len(state.unlocked), window, i, 0xA11CE)
            keys.append((-math.log1p(-u) / w, i))
        if self.config.explore_weight > 0:
            u = _rng.uniform(state.seed, len(state.unlocked), window, len(ACHIEVEMENTS), 0xA11CE)
            keys.append((-math.log1p(-u) / self.config.explore_weight, len(ACHIEVEMENTS)))
        keys.sort()
        return [ACHIEVEMENTS[i] if i < len(ACHIEVEMENTS) else None for _, i in keys]

    @staticmethod
    def _survive(planner: _Planner, state: WorldState):
        health, food, drink, energy = state.status
        px, py = state.pos
        if health <= 5:
            for dr in _DIRS:
                dx, dy = dr.delta
                kind = planner.mobs.get((px + dx, py + dy))
                if kind in (EntityKind.ZOMBIE, EntityKind.SKELETON):
                    return Action.DO if state.facing is dr else _MOVE_OF[dr]
        if drink < SURVIVAL_THRESHOLD:
            a = planner.plan(A.COLLECT_DRINK)
            if a is not None:
                return a
        if food < SURVIVAL_THRESHOLD:
            a = planner.plan(A.EAT_COW) or planner.plan(A.EAT_PLANT)
            if a is not None:
                return a
        if energy < SURVIVAL_THRESHOLD:
            return Action.SLEEP
        return None

    @staticmethod
    def _wander(state: WorldState) -> Action:
        k = _rng.randint(4, state.seed, state.t // 6, 4242)
        px, py = state.pos
        for i in range(4):
            dr = _DIRS[(k + i) % 4]
            dx, dy = dr.delta
            x, y = px + dx, py + dy
            if state.terrain[y, x] in _WALK and state.entity_at(x, y) is None:
                return _MOVE_OF[dr]
        return Action.NOOP
