"""Enumerations shared by the simulator and everything downstream of it.

Enum member order is the canonical order used for rendering, tie-breaking and
the model's action axis. Do not reorder.
"""
from __future__ import annotations

from enum import Enum


class TileKind(str, Enum):
    GRASS = "grass"
    SAND = "sand"
    PATH = "path"
    WATER = "water"
    TREE = "tree"
    STONE = "stone"
    COAL = "coal"
    IRON = "iron"
    DIAMOND = "diamond"
    LAVA = "lava"
    TABLE = "table"
    FURNACE = "furnace"
    PLANT = "plant"
    PLANTED_SAPLING = "planted_sapling"


class EntityKind(str, Enum):
    ZOMBIE = "zombie"
    SKELETON = "skeleton"
    COW = "cow"


class ItemKind(str, Enum):
    WOOD = "wood"
    STONE = "stone"
    COAL = "coal"
    IRON = "iron"
    DIAMOND = "diamond"
    SAPLING = "sapling"
    WOOD_PICKAXE = "wood_pickaxe"
    STONE_PICKAXE = "stone_pickaxe"
    IRON_PICKAXE = "iron_pickaxe"
    WOOD_SWORD = "wood_sword"
    STONE_SWORD = "stone_sword"
    IRON_SWORD = "iron_sword"


class Action(str, Enum):
    MOVE_LEFT = "move_left"
    MOVE_RIGHT = "move_right"
    MOVE_UP = "move_up"
    MOVE_DOWN = "move_down"
    DO = "do"
    SLEEP = "sleep"
    PLACE_STONE = "place_stone"
    PLACE_TABLE = "place_table"
    PLACE_FURNACE = "place_furnace"
    PLACE_PLANT = "place_plant"
    MAKE_WOOD_PICKAXE = "make_wood_pickaxe"
    MAKE_WOOD_SWORD = "make_wood_sword"
    MAKE_STONE_PICKAXE = "make_stone_pickaxe"
    MAKE_STONE_SWORD = "make_stone_sword"
    MAKE_IRON_PICKAXE = "make_iron_pickaxe"
    MAKE_IRON_SWORD = "make_iron_sword"
    NOOP = "noop"


class Achievement(str, Enum):
    COLLECT_SAPLING = "collect_sapling"
    PLACE_PLANT = "place_plant"
    EAT_PLANT = "eat_plant"
    WAKE_UP = "wake_up"
    EAT_COW = "eat_cow"
    COLLECT_DRINK = "collect_drink"
    COLLECT_WOOD = "collect_wood"
    PLACE_TABLE = "place_table"
    MAKE_WOOD_PICKAXE = "make_wood_pickaxe"
    MAKE_WOOD_SWORD = "make_wood_sword"
    COLLECT_STONE = "collect_stone"
    MAKE_STONE_PICKAXE = "make_stone_pickaxe"
    MAKE_STONE_SWORD = "make_stone_sword"
    PLACE_STONE = "place_stone"
    COLLECT_COAL = "collect_coal"
    PLACE_FURNACE = "place_furnace"
    COLLECT_IRON = "collect_iron"
    MAKE_IRON_PICKAXE = "make_iron_pickaxe"
    MAKE_IRON_SWORD = "make_iron_sword"
    COLLECT_DIAMOND = "collect_diamond"
    DEFEAT_SKELETON = "defeat_skeleton"
    DEFEAT_ZOMBIE = "defeat_zombie"


class Direction(str, Enum):
    NORTH = "north"
    EAST = "east"
    SOUTH = "south"
    WEST = "west"

    @property
    def delta(self) -> tuple[int, int]:
        return _DELTAS[self]


# y grows southward
_DELTAS = {
    Direction.NORTH: (0, -1),
    Direction.EAST: (1, 0),
    Direction.SOUTH: (0, 1),
    Direction.WEST: (-1, 0),
}

ACTIONS: tuple[Action, ...] = tuple(Action)
ACHIEVEMENTS: tuple[Achievement, ...] = tuple(Achievement)
N_ACTIONS = len(ACTIONS)
ACTION_INDEX = {a: i for i, a in enumerate(ACTIONS)}

MOVES = {
    Action.MOVE_LEFT: Direction.WEST,
    Action.MOVE_RIGHT: Direction.EAST,
    Action.MOVE_UP: Direction.NORTH,
    Action.MOVE_DOWN: Direction.SOUTH,
}

WALKABLE = frozenset({TileKind.GRASS, TileKind.SAND, TileKind.PATH, TileKind.LAVA})
PLACEABLE = frozenset({TileKind.GRASS, TileKind.SAND, TileKind.PATH})

TASK_TYPES: dict[str, tuple[Achievement, ...]] = {
    "Harvest": (Achievement.COLLECT_SAPLING, Achievement.PLACE_PLANT, Achievement.EAT_PLANT),
    "Status": (Achievement.WAKE_UP, Achievement.EAT_COW, Achievement.COLLECT_DRINK),
    "Wood": (
        Achievement.COLLECT_WOOD,
        Achievement.PLACE_TABLE,
        Achievement.MAKE_WOOD_PICKAXE,
        Achievement.MAKE_WOOD_SWORD,
    ),
    "Stone": (
        Achievement.COLLECT_STONE,
        Achievement.MAKE_STONE_PICKAXE,
        Achievement.MAKE_STONE_SWORD,
        Achievement.PLACE_STONE,
    ),
    "Iron": (
        Achievement.COLLECT_COAL,
        Achievement.PLACE_FURNACE,
        Achievement.COLLECT_IRON,
        Achievement.MAKE_IRON_PICKAXE,
        Achievement.MAKE_IRON_SWORD,
        Achievement.COLLECT_DIAMOND,
    ),
    "Hunt": (Achievement.DEFEAT_SKELETON, Achievement.DEFEAT_ZOMBIE),
}
TASK_TYPE_OF = {a: t for t, skills in TASK_TYPES.items() for a in skills}

# Harvest/Status/Hunt sit outside the tool ladder.
TIER_OF_TYPE = {"Harvest": 0, "Status": 0, "Hunt": 0, "Wood": 1, "Stone": 2, "Iron": 3}


def tier(skill: Achievement) -> int:
    return TIER_OF_TYPE[TASK_TYPE_OF[skill]]


# Skill-level prerequisite graph (the tech tree over achievements).
SKILL_PREREQS: dict[Achievement, tuple[Achievement, ...]] = {
    Achievement.COLLECT_SAPLING: (),
    Achievement.PLACE_PLANT: (Achievement.COLLECT_SAPLING,),
    Achievement.EAT_PLANT: (Achievement.PLACE_PLANT,),
    Achievement.WAKE_UP: (),
    Achievement.EAT_COW: (),
    Achievement.COLLECT_DRINK: (),
    Achievement.COLLECT_WOOD: (),
    Achievement.PLACE_TABLE: (Achievement.COLLECT_WOOD,),
    Achievement.MAKE_WOOD_PICKAXE: (Achievement.PLACE_TABLE,),
    Achievement.MAKE_WOOD_SWORD: (Achievement.PLACE_TABLE,),
    Achievement.COLLECT_STONE: (Achievement.MAKE_WOOD_PICKAXE,),
    Achievement.MAKE_STONE_PICKAXE: (Achievement.COLLECT_STONE,),
    Achievement.MAKE_STONE_SWORD: (Achievement.COLLECT_STONE,),
    Achievement.PLACE_STONE: (Achievement.COLLECT_STONE,),
    # coal only needs a wood pickaxe to mine, but it opens the iron tier, so it
    # sits after stone in the skill chain
    Achievement.COLLECT_COAL: (Achievement.COLLECT_STONE,),
    Achievement.PLACE_FURNACE: (Achievement.COLLECT_STONE,),
    Achievement.COLLECT_IRON: (Achievement.MAKE_STONE_PICKAXE,),
    Achievement.MAKE_IRON_PICKAXE: (
        Achievement.COLLECT_IRON,
        Achievement.COLLECT_COAL,
        Achievement.PLACE_FURNACE,
    ),
    Achievement.MAKE_IRON_SWORD: (
        Achievement.COLLECT_IRON,
        Achievement.COLLECT_COAL,
        Achievement.PLACE_FURNACE,
    ),
    Achievement.COLLECT_DIAMOND: (Achievement.MAKE_IRON_PICKAXE,),
    Achievement.DEFEAT_SKELETON: (),
    Achievement.DEFEAT_ZOMBIE: (),
}

# Item-level prerequisites used by InitSpec consistency checks.
ITEM_PREREQS: dict[ItemKind, tuple[ItemKind, ...]] = {
    ItemKind.WOOD: (),
    ItemKind.SAPLING: (),
    ItemKind.WOOD_PICKAXE: (),
    ItemKind.WOOD_SWORD: (),
    ItemKind.STONE: (ItemKind.WOOD_PICKAXE,),
    ItemKind.COAL: (ItemKind.WOOD_PICKAXE,),
    ItemKind.STONE_PICKAXE: (ItemKind.WOOD_PICKAXE,),
    ItemKind.STONE_SWORD: (ItemKind.WOOD_PICKAXE,),
    ItemKind.IRON: (ItemKind.STONE_PICKAXE,),
    ItemKind.IRON_PICKAXE: (ItemKind.STONE_PICKAXE,),
    ItemKind.IRON_SWORD: (ItemKind.STONE_PICKAXE,),
    ItemKind.DIAMOND: (ItemKind.IRON_PICKAXE,),
}

# Tool tier of each item: 0 bare, 1 wood, 2 stone, 3 iron.
ITEM_TIER = {
    ItemKind.WOOD: 0,
    ItemKind.SAPLING: 0,
    ItemKind.WOOD_PICKAXE: 1,
    ItemKind.WOOD_SWORD: 1,
    ItemKind.STONE: 2,
    ItemKind.COAL: 2,
    ItemKind.STONE_PICKAXE: 2,
    ItemKind.STONE_SWORD: 2,
    ItemKind.IRON: 3,
    ItemKind.IRON_PICKAXE: 3,
    ItemKind.IRON_SWORD: 3,
    ItemKind.DIAMOND: 3,
}
