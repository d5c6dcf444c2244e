"""World state, step dynamics, observation and text rendering.

States are treated as immutable values: :func:`step` never mutates its input and
shares the terrain array with its successor unless a tile changed.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace

import numpy as np

from . import rng as _rng
from .initspec import InitSpec, check_consistency
from .kinds import (
    ACTIONS,
    MOVES,
    PLACEABLE,
    WALKABLE,
    Achievement,
    Action,
    Direction,
    EntityKind,
    ItemKind,
    TileKind,
)
from .worldgen import SIZE, TILE_CODES, TILES, generate_terrain, initial_entities, spawn_point

STATE_SCHEMA = "craftworld.state.v1"
METERS = ("health", "food", "drink", "energy")
VIEW_W, VIEW_H = 9, 7

FOOD_PERIOD = 25
DRINK_PERIOD = 25
ENERGY_PERIOD = 30
DEGEN_PERIOD = 10
RECOVER_PERIOD = 25
PLANT_RIPEN = 60
MOB_HEALTH = 3
MOB_COOLDOWN = 5
MOB_ACTIVE_RADIUS = 12
SAPLING_CHANCE = 0.1
COW_FOOD = 6
PLANT_FOOD = 4

_SALT_SAPLING = 1
_SALT_MOB = 1000

_T = TILE_CODES
_WALK_CODES = frozenset(_T[k] for k in WALKABLE)
_MOB_WALK = frozenset(_T[k] for k in (TileKind.GRASS, TileKind.SAND, TileKind.PATH))
_SKELETON_WALK = frozenset([_T[TileKind.PATH]])
_INV53 = 1.0 / (1 << 53)
_PLACE_CODES = frozenset(_T[k] for k in PLACEABLE)

_HARVEST = {
    TileKind.TREE: (ItemKind.WOOD, None, None, Achievement.COLLECT_WOOD),
    TileKind.STONE: (ItemKind.STONE, ItemKind.WOOD_PICKAXE, TileKind.PATH, Achievement.COLLECT_STONE),
    TileKind.COAL: (ItemKind.COAL, ItemKind.WOOD_PICKAXE, TileKind.PATH, Achievement.COLLECT_COAL),
    TileKind.IRON: (ItemKind.IRON, ItemKind.STONE_PICKAXE, TileKind.PATH, Achievement.COLLECT_IRON),
    TileKind.DIAMOND: (ItemKind.DIAMOND, ItemKind.IRON_PICKAXE, TileKind.PATH, Achievement.COLLECT_DIAMOND),
}

# action -> (consumed items, needs table, needs furnace, product)
RECIPES = {
    Action.MAKE_WOOD_PICKAXE: ({ItemKind.WOOD: 1}, True, False, ItemKind.WOOD_PICKAXE),
    Action.MAKE_WOOD_SWORD: ({ItemKind.WOOD: 1}, True, False, ItemKind.WOOD_SWORD),
    Action.MAKE_STONE_PICKAXE: ({ItemKind.WOOD: 1, ItemKind.STONE: 1}, True, False, ItemKind.STONE_PICKAXE),
    Action.MAKE_STONE_SWORD: ({ItemKind.WOOD: 1, ItemKind.STONE: 1}, True, False, ItemKind.STONE_SWORD),
    Action.MAKE_IRON_PICKAXE: ({ItemKind.WOOD: 1, ItemKind.COAL: 1, ItemKind.IRON: 1}, True, True,
                               ItemKind.IRON_PICKAXE),
    Action.MAKE_IRON_SWORD: ({ItemKind.WOOD: 1, ItemKind.COAL: 1, ItemKind.IRON: 1}, True, True,
                             ItemKind.IRON_SWORD),
}

# action -> (consumed items, needs table nearby, tile placed, achievement)
PLACEMENTS = {
    Action.PLACE_STONE: ({ItemKind.STONE: 1}, False, TileKind.STONE, Achievement.PLACE_STONE),
    Action.PLACE_TABLE: ({ItemKind.WOOD: 1}, False, TileKind.TABLE, Achievement.PLACE_TABLE),
    Action.PLACE_FURNACE: ({ItemKind.STONE: 1}, True, TileKind.FURNACE, Achievement.PLACE_FURNACE),
    Action.PLACE_PLANT: ({ItemKind.SAPLING: 1}, False, TileKind.PLANTED_SAPLING, Achievement.PLACE_PLANT),
}

SWORD_DAMAGE = ((ItemKind.IRON_SWORD, 5), (ItemKind.STONE_SWORD, 3), (ItemKind.WOOD_SWORD, 2))


@dataclass(frozen=True)
class Entity:
    uid: int
    kind: EntityKind
    x: int
    y: int
    health: int = MOB_HEALTH
    cooldown: int = 0


@dataclass(frozen=True)
class Counters:
    hunger: int = 0
    thirst: int = 0
    fatigue: int = 0
    recover: int = 0
    degen: int = 0


@dataclass(frozen=True)
class WorldState:
    seed: int
    terrain: np.ndarray
    entities: tuple[Entity, ...]
    pos: tuple[int, int]
    facing: Direction
    status: tuple[int, int, int, int]
    inventory: tuple[int, ...]
    unlocked: frozenset
    t: int = 0
    counters: Counters = field(default_factory=Counters)
    saplings: tuple[tuple[int, int, int], ...] = ()
    next_uid: int = 0
    dead: bool = False

    def item(self, item: ItemKind) -> int:
        return self.inventory[_ITEM_IDX[item]]

    def tile(self, x: int, y: int) -> TileKind:
        return TILES[self.terrain[y, x]]

    @property
    def health(self) -> int:
        return self.status[0]

    @property
    def terminal(self) -> bool:
        return self.dead or self.status[0] <= 0

    def facing_cell(self) -> tuple[int, int]:
        dx, dy = self.facing.delta
        return self.pos[0] + dx, self.pos[1] + dy

    def entity_at(self, x: int, y: int) -> Entity | None:
        for e in self.entities:
            if e.x == x and e.y == y:
                return e
        return None


_ITEMS = tuple(ItemKind)
_ACH = tuple(Achievement)
_ITEM_IDX = {k: i for i, k in enumerate(_ITEMS)}


@dataclass(frozen=True)
class StepOutcome:
    unlocked: tuple[Achievement, ...] = ()
    status_delta: tuple[int, int, int, int] = (0, 0, 0, 0)
    inventory_delta: tuple[tuple[str, int], ...] = ()
    ineffective: bool = False
    terminal: bool = False

    def to_json(self) -> dict:
        return {
            "unlocked": [a.value for a in self.unlocked],
            "status_delta": list(self.status_delta),
            "inventory_delta": {k: v for k, v in self.inventory_delta},
            "ineffective": self.ineffective,
            "terminal": self.terminal,
        }

    @classmethod
    def from_json(cls, d: dict) -> "StepOutcome":
        return cls(
            unlocked=tuple(Achievement(a) for a in d["unlocked"]),
            status_delta=tuple(d["status_delta"]),
            inventory_delta=tuple(d["inventory_delta"].items()),
            ineffective=d["ineffective"],
            terminal=d["terminal"],
        )


# ---------------------------------------------------------------- creation


# Table/furnace go diagonal to spawn so the facing cell (south) stays free.
_STRUCTURE_SLOTS = ((-1, -1), (1, -1), (-1, 1), (1, 1))
# Resources sit two steps away on an open straight line.
_RESOURCE_SLOTS = ((-2, 0), (2, 0), (0, -2), (0, 2), (-3, 0), (3, 0), (0, -3), (0, 3))


def new_world(seed: int, spec: InitSpec | None = None) -> WorldState:
    """Create a world; identical ``(seed, spec)`` always yields an identical state."""
    spec = spec or InitSpec()
    check_consistency(spec)
    terrain, _ = generate_terrain(seed)
    size = terrain.shape[0]
    spawn = spawn_point(size)
    mobs = [(k, x, y) for k, x, y in initial_entities(terrain, seed)]
    saplings = []
    structures = [k for k in spec.nearby if k in (TileKind.TABLE.value, TileKind.FURNACE.value)]
    others = [k for k in spec.nearby if k not in structures]
    if spec.nearby:
        # clear spawn surroundings so provisioning is always possible
        cx, cy = spawn
        terrain[cy - 3:cy + 4, cx - 3:cx + 4] = _T[TileKind.GRASS]
        mobs = [m for m in mobs if max(abs(m[1] - cx), abs(m[2] - cy)) > 3]
        slots = list(_STRUCTURE_SLOTS)
        for i, kind in enumerate(structures):
            k = _rng.randint(len(slots), seed, 77, i)
            dx, dy = slots.pop(k)
            terrain[cy + dy, cx + dx] = _T[TileKind(kind)]
        rslots = list(_RESOURCE_SLOTS)
        for i, kind in enumerate(others):
            k = _rng.randint(min(4, len(rslots)), seed, 78, i)
            dx, dy = rslots.pop(k)
            x, y = cx + dx, cy + dy
            if kind in {e.value for e in EntityKind}:
                mobs.append((EntityKind(kind), x, y))
            else:
                terrain[y, x] = _T[TileKind(kind)]
    terrain.setflags(write=False)
    inv = [0] * len(_ITEMS)
    for name, n in spec.inventory:
        inv[_ITEM_IDX[ItemKind(name)]] = n
    entities = tuple(Entity(uid=i, kind=k, x=x, y=y) for i, (k, x, y) in enumerate(mobs))
    return WorldState(
        seed=seed,
        terrain=terrain,
        entities=entities,
        pos=spawn,
        facing=Direction.SOUTH,
        status=tuple(spec.status),
        inventory=tuple(inv),
        unlocked=frozenset(),
        t=0,
        counters=Counters(),
        saplings=tuple(saplings),
        next_uid=len(entities),
    )


# ---------------------------------------------------------------- dynamics


def _near(state: WorldState, kind: TileKind, x: int | None = None, y: int | None = None) -> bool:
    """Is a tile of ``kind`` within Chebyshev distance 1 of the agent?"""
    px, py = state.pos if x is None else (x, y)
    code = _T[kind]
    sub = state.terrain[py - 1:py + 2, px - 1:px + 2]
    return bool((sub == code).any())


def _in_bounds(x: int, y: int) -> bool:
    return 0 < x < SIZE - 1 and 0 < y < SIZE - 1


def _free(state: WorldState, x: int, y: int, codes=_WALK_CODES) -> bool:
    return _in_bounds(x, y) and state.terrain[y, x] in codes and state.entity_at(x, y) is None


def step(state: WorldState, action: Action) -> tuple[WorldState, StepOutcome]:
    """Advance one tick. Invalid actions are no-ops flagged ``ineffective``."""
    if state.terminal:
        raise ValueError("step() called on a terminal state")
    action = Action(action)
    terrain = state.terrain
    inv = list(state.inventory)
    status = list(state.status)
    entities = list(state.entities)
    unlocked = set()
    pos = state.pos
    facing = state.facing
    saplings = list(state.saplings)
    effective = False
    slept = False
    dead = False

    def set_tile(x, y, kind):
        nonlocal terrain
        if terrain is state.terrain:
            terrain = terrain.copy()
        terrain[y, x] = _T[kind]

    fx, fy = state.facing_cell()

    if action in MOVES:
        d = MOVES[action]
        dx, dy = d.delta
        nx, ny = pos[0] + dx, pos[1] + dy
        if d is not facing:
            facing = d
            effective = True
        if _free(state, nx, ny):
            pos = (nx, ny)
            effective = True
            if terrain[ny, nx] == _T[TileKind.LAVA]:
                dead = True
    elif action is Action.DO:
        target = state.entity_at(fx, fy)
        if target is not None:
            idx = entities.index(target)
            if target.kind is EntityKind.COW:
                entities.pop(idx)
                status[1] = min(9, status[1] + COW_FOOD)
                unlocked.add(Achievement.EAT_COW)
                effective = True
            else:
                dmg = 1
                for sword, v in SWORD_DAMAGE:
                    if inv[_ITEM_IDX[sword]] > 0:
                        dmg = v
                        break
                hp = target.health - dmg
                effective = True
                if hp <= 0:
                    entities.pop(idx)
                    unlocked.add(Achievement.DEFEAT_ZOMBIE if target.kind is EntityKind.ZOMBIE
                                 else Achievement.DEFEAT_SKELETON)
                else:
                    entities[idx] = replace(target, health=hp)
        else:
            tile = TILES[terrain[fy, fx]]
            if tile in _HARVEST:
                item, tool, leaves, ach = _HARVEST[tile]
                if tool is None or inv[_ITEM_IDX[tool]] > 0:
                    i = _ITEM_IDX[item]
                    if inv[i] < 9:
                        inv[i] += 1
                        effective = True
                    if ach not in state.unlocked:
                        effective = True
                    unlocked.add(ach)
                    if leaves is not None:
                        set_tile(fx, fy, leaves)
                        effective = True
            elif tile is TileKind.WATER:
                if status[2] < 9 or Achievement.COLLECT_DRINK not in state.unlocked:
                    effective = True
                status[2] = min(9, status[2] + 1)
                unlocked.add(Achievement.COLLECT_DRINK)
            elif tile is TileKind.GRASS:
                if _rng.uniform(state.seed, state.t, _SALT_SAPLING) < SAPLING_CHANCE:
                    i = _ITEM_IDX[ItemKind.SAPLING]
                    if inv[i] < 9:
                        inv[i] += 1
                        effective = True
                    if Achievement.COLLECT_SAPLING not in state.unlocked:
                        effective = True
                    unlocked.add(Achievement.COLLECT_SAPLING)
            elif tile is TileKind.PLANT:
                status[1] = min(9, status[1] + PLANT_FOOD)
                set_tile(fx, fy, TileKind.GRASS)
                unlocked.add(Achievement.EAT_PLANT)
                effective = True
    elif action is Action.SLEEP:
        if status[3] < 9:
            status[3] += 1
            slept = True
            effective = True
            if status[3] == 9:
                unlocked.add(Achievement.WAKE_UP)
    elif action in PLACEMENTS:
        cost, need_table, tile, ach = PLACEMENTS[action]
        ok = (
            _in_bounds(fx, fy)
            and terrain[fy, fx] in _PLACE_CODES
            and state.entity_at(fx, fy) is None
            and all(inv[_ITEM_IDX[k]] >= n for k, n in cost.items())
            and (not need_table or _near(state, TileKind.TABLE))
        )
        if ok:
            for k, n in cost.items():
                inv[_ITEM_IDX[k]] -= n
            set_tile(fx, fy, tile)
            if tile is TileKind.PLANTED_SAPLING:
                saplings.append((fx, fy, state.t))
            unlocked.add(ach)
            effective = True
    elif action in RECIPES:
        cost, need_table, need_furnace, product = RECIPES[action]
        ok = (
            all(inv[_ITEM_IDX[k]] >= n for k, n in cost.items())
            and (not need_table or _near(state, TileKind.TABLE))
            and (not need_furnace or _near(state, TileKind.FURNACE))
        )
        if ok:
            for k, n in cost.items():
                inv[_ITEM_IDX[k]] -= n
            i = _ITEM_IDX[product]
            inv[i] = min(9, inv[i] + 1)
            unlocked.add(Achievement(action.value))
            effective = True

    # saplings planted at least PLANT_RIPEN ticks ago become edible plants
    if saplings:
        keep = []
        for sx, sy, t0 in saplings:
            if terrain[sy, sx] != _T[TileKind.PLANTED_SAPLING]:
                continue
            if state.t + 1 - t0 >= PLANT_RIPEN:
                set_tile(sx, sy, TileKind.PLANT)
            else:
                keep.append((sx, sy, t0))
        saplings = keep

    # mobs
    entities, damage = _update_mobs(state.seed, terrain, entities, pos, state.t)
    status[0] = max(0, status[0] - damage)

    counters = state.counters
    hunger = counters.hunger + 1
    thirst = counters.thirst + 1
    fatigue = 0 if slept else counters.fatigue + 1
    if hunger >= FOOD_PERIOD:
        hunger = 0
        status[1] = max(0, status[1] - 1)
    if thirst >= DRINK_PERIOD:
        thirst = 0
        status[2] = max(0, status[2] - 1)
    if fatigue >= ENERGY_PERIOD:
        fatigue = 0
        status[3] = max(0, status[3] - 1)
    degen, recover = counters.degen, counters.recover
    if min(status[1:]) == 0:
        degen += 1
        recover = 0
        if degen >= DEGEN_PERIOD:
            degen = 0
            status[0] = max(0, status[0] - 1)
    elif min(status[1:]) >= 5:
        recover += 1
        degen = 0
        if recover >= RECOVER_PERIOD:
            recover = 0
            status[0] = min(9, status[0] + 1)
    if dead:
        status[0] = 0

    if terrain is not state.terrain:
        terrain.setflags(write=False)
    new_unlocks = tuple(a for a in _ACH if a in unlocked and a not in state.unlocked) if unlocked else ()
    new_state = WorldState(
        seed=state.seed,
        terrain=terrain,
        entities=tuple(entities),
        pos=pos,
        facing=facing,
        status=tuple(status),
        inventory=tuple(inv),
        unlocked=state.unlocked | frozenset(new_unlocks),
        t=state.t + 1,
        counters=Counters(hunger, thirst, fatigue, recover, degen),
        saplings=tuple(saplings),
        next_uid=state.next_uid,
        dead=dead,
    )
    inv_delta = tuple(
        (item.value, inv[i] - state.inventory[i]) for i, item in enumerate(_ITEMS)
        if inv[i] != state.inventory[i]
    )
    outcome = StepOutcome(
        unlocked=new_unlocks,
        status_delta=tuple(a - b for a, b in zip(status, state.status)),
        inventory_delta=inv_delta,
        ineffective=not effective and action is not Action.NOOP,
        terminal=new_state.terminal,
    )
    return new_state, outcome


_DIRS4 = ((0, -1), (1, 0), (0, 1), (-1, 0))


def _update_mobs(seed: int, terrain: np.ndarray, entities, pos: tuple[int, int],
                 t: int) -> tuple[list[Entity], int]:
    """Move mobs and resolve their attacks; returns (entities, damage to agent)."""
    ax, ay = pos
    radius = MOB_ACTIVE_RADIUS
    # far-away mobs are frozen; keeps the per-step cost independent of map size
    active = [i for i, e in enumerate(entities)
              if -radius <= e.x - ax <= radius and abs(e.x - ax) + abs(e.y - ay) <= radius]
    out = list(entities)
    damage = 0
    if not active:
        return out, damage
    occupied = {(o.x, o.y) for o in entities}
    prefix = _rng.mix(seed, t)
    for i in active:
        e = entities[i]
        dist = abs(e.x - ax) + abs(e.y - ay)
        # same draws as uniform(seed, t, salt) and randint(4, seed, t, salt, 1), sharing the prefix
        h = _rng.extend(prefix, _SALT_MOB + e.uid)
        u = (h >> 11) * _INV53
        x, y, cd = e.x, e.y, max(0, e.cooldown - 1)
        if e.kind is not EntityKind.COW and dist == 1:
            if cd == 0:
                damage += 1
                cd = MOB_COOLDOWN
        else:
            step_to = None
            if e.kind is EntityKind.ZOMBIE and dist <= 6 and u < 0.8:
                dx, dy = ax - x, ay - y
                if abs(dx) >= abs(dy):
                    step_to = (x + (1 if dx > 0 else -1), y)
                else:
                    step_to = (x, y + (1 if dy > 0 else -1))
            elif u < 0.5:
                ddx, ddy = _DIRS4[_rng.extend(h, 1) & 3]
                step_to = (x + ddx, y + ddy)
            if step_to is not None:
                nx, ny = step_to
                codes = _SKELETON_WALK if e.kind is EntityKind.SKELETON else _MOB_WALK
                if (_in_bounds(nx, ny) and terrain[ny, nx] in codes
                        and (nx, ny) not in occupied and (nx, ny) != (ax, ay)):
                    occupied.discard((x, y))
                    occupied.add((nx, ny))
                    x, y = nx, ny
        if x != e.x or y != e.y or cd != e.cooldown:
            out[i] = Entity(e.uid, e.kind, x, y, e.health, cd)
    return out, damage


# ---------------------------------------------------------------- observation


_DIR_ORDER = ("north", "north-east", "east", "south-east", "south", "south-west", "west", "north-west")
_TILE_NAMES = tuple(k.value for k in TILES)
_KIND_ORDER = {name: i for i, name in enumerate([k.value for k in TileKind] + [e.value for e in EntityKind])}


def direction_name(dx: int, dy: int) -> str:
    """Compass name for an offset (y grows southward)."""
    ns = "north" if dy < 0 else "south" if dy > 0 else ""
    ew = "east" if dx > 0 else "west" if dx < 0 else ""
    return "-".join(p for p in (ns, ew) if p)


def step_distance(dx: int, dy: int) -> int:
    return abs(dx) + abs(dy)


@dataclass(frozen=True)
class Observation:
    status: tuple[int, int, int, int]
    inventory: tuple[tuple[str, int], ...]
    visible: tuple[tuple[str, int, str], ...]
    facing: tuple[str, str]

    def to_json(self) -> dict:
        return {
            "status": list(self.status),
            "inventory": [list(p) for p in self.inventory],
            "visible": [list(v) for v in self.visible],
            "facing": list(self.facing),
        }

    @classmethod
    def from_json(cls, d: dict) -> "Observation":
        return cls(
            status=tuple(d["status"]),
            inventory=tuple((k, n) for k, n in d["inventory"]),
            visible=tuple((k, n, di) for k, n, di in d["visible"]),
            facing=tuple(d["facing"]),
        )


def _view_offsets():
    """View cells sorted by (distance, direction), so the first hit per kind is the nearest."""
    hx, hy = VIEW_W // 2, VIEW_H // 2
    cells = []
    for dy in range(-hy, hy + 1):
        for dx in range(-hx, hx + 1):
            if dx or dy:
                cells.append((dx, dy, (step_distance(dx, dy), _DIR_ORDER.index(direction_name(dx, dy)))))
    cells.sort(key=lambda c: c[2])
    return tuple(cells)


_VIEW = _view_offsets()
# same cells as window coordinates, for agents far enough from the border
_VIEW_LOCAL = tuple((dx + VIEW_W // 2, dy + VIEW_H // 2, key) for dx, dy, key in _VIEW)
# same cells as offsets into the flattened map, for the interior fast path
_VIEW_FLAT = np.array([dy * SIZE + dx for dx, dy, _ in _VIEW], dtype=np.intp)
_VIEW_KEYS = tuple(key for _, _, key in _VIEW)


def observe(state: WorldState) -> Observation:
    ax, ay = state.pos
    hx, hy = VIEW_W // 2, VIEW_H // 2
    mobs = {(e.x, e.y): e.kind.value for e in state.entities
            if ax - hx <= e.x <= ax + hx and ay - hy <= e.y <= ay + hy}
    x0, y0 = ax - hx, ay - hy
    ox, oy = max(0, x0), max(0, y0)
    best: dict[str, tuple[int, int]] = {}
    if not mobs and x0 >= 0 and y0 >= 0 and ax + hx < SIZE and ay + hy < SIZE:
        # tile codes in priority order; the first cell of each code is its nearest instance
        cells = state.terrain.ravel().take(_VIEW_FLAT + (ay * SIZE + ax)).tobytes()
        for c in set(cells):
            best[_TILE_NAMES[c]] = _VIEW_KEYS[cells.index(c)]
    else:
        window = state.terrain[oy:ay + hy + 1, ox:ax + hx + 1].tolist()
        for dx, dy, key in _VIEW:
            x, y = ax + dx, ay + dy
            if not (0 <= x < SIZE and 0 <= y < SIZE):
                continue
            name = mobs.get((x, y)) if mobs else None
            if name is None:
                name = _TILE_NAMES[window[y - oy][x - ox]]
            if name not in best:
                best[name] = key
    visible = sorted(
        ((name, d, _DIR_ORDER[di]) for name, (d, di) in best.items()),
        key=lambda v: (v[1], _KIND_ORDER[v[0]]),
    )
    fx, fy = state.facing_cell()
    fname = mobs.get((fx, fy)) or TILES[state.terrain[fy, fx]].value
    inventory = tuple((item.value, n) for item, n in zip(_ITEMS, state.inventory) if n > 0)
    return Observation(
        status=state.status,
        inventory=inventory,
        visible=tuple(visible),
        facing=(fname, state.facing.value),
    )


def render_text(obs: Observation) -> str:
    lines = ["### Current Observation", "Your status:"]
    for name, v in zip(METERS, obs.status):
        lines.append(f"- {name}: {v}/9")
    lines += ["", "Your inventory:"]
    for name, n in obs.inventory:
        lines.append(f"- {name}: {n}")
    lines += ["", "You see:"]
    for name, d, direction in obs.visible:
        lines.append(f"- {name} {d} steps to your {direction}")
    lines += ["", f"You are facing {obs.facing[0]} at your front ({obs.facing[1]} direction)"]
    return "\n".join(lines)


# ---------------------------------------------------------------- serialization


_TILE_CHARS = "gspwtSciDLTFPy"
assert len(_TILE_CHARS) == len(TILES) and len(set(_TILE_CHARS)) == len(TILES)
_CHAR_CODE = {c: i for i, c in enumerate(_TILE_CHARS)}
_CHAR_BYTES = np.frombuffer(_TILE_CHARS.encode("ascii"), dtype=np.uint8)


def state_to_json(state: WorldState) -> dict:
    return {
        "schema": STATE_SCHEMA,
        "seed": state.seed,
        "terrain": [row.tobytes().decode("ascii") for row in _CHAR_BYTES[state.terrain]],
        "entities": [
            {"uid": e.uid, "kind": e.kind.value, "x": e.x, "y": e.y, "health": e.health,
             "cooldown": e.cooldown}
            for e in state.entities
        ],
        "pos": list(state.pos),
        "facing": state.facing.value,
        "status": list(state.status),
        "inventory": {item.value: n for item, n in zip(_ITEMS, state.inventory)},
        "unlocked": [a.value for a in Achievement if a in state.unlocked],
        "t": state.t,
        "counters": [state.counters.hunger, state.counters.thirst, state.counters.fatigue,
                     state.counters.recover, state.counters.degen],
        "saplings": [list(s) for s in state.saplings],
        "next_uid": state.next_uid,
        "dead": state.dead,
    }


def state_from_json(data: dict) -> WorldState:
    if data.get("schema") != STATE_SCHEMA:
        raise ValueError(f"unsupported state schema {data.get('schema')!r}")
    terrain = np.array([[_CHAR_CODE[c] for c in row] for row in data["terrain"]], dtype=np.uint8)
    terrain.setflags(write=False)
    return WorldState(
        seed=data["seed"],
        terrain=terrain,
        entities=tuple(
            Entity(e["uid"], EntityKind(e["kind"]), e["x"], e["y"], e["health"], e["cooldown"])
            for e in data["entities"]
        ),
        pos=tuple(data["pos"]),
        facing=Direction(data["facing"]),
        status=tuple(data["status"]),
        inventory=tuple(data["inventory"][i.value] for i in _ITEMS),
        unlocked=frozenset(Achievement(a) for a in data["unlocked"]),
        t=data["t"],
        counters=Counters(*data["counters"]),
        saplings=tuple(tuple(s) for s in data["saplings"]),
        next_uid=data["next_uid"],
        dead=data["dead"],
    )


def state_bytes(state: WorldState) -> bytes:
    return json.dumps(state_to_json(state), sort_keys=True, separators=(",", ":")).encode()


def state_digest(state: WorldState) -> str:
    return hashlib.sha256(state_bytes(state)).hexdigest()


def terrain_histogram(state: WorldState) -> dict[str, int]:
    counts = np.bincount(state.terrain.ravel(), minlength=len(TILES))
    return {k.value: int(c) for k, c in zip(TILES, counts)}


__all__ = [
    "ACTIONS",
    "Entity",
    "Observation",
    "StepOutcome",
    "WorldState",
    "new_world",
    "observe",
    "render_text",
    "state_digest",
    "state_from_json",
    "state_to_json",
    "step",
]
