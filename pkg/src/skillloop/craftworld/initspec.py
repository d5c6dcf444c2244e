"""Episode initialization specs and the randomized sampler used during exploration."""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from .kinds import ITEM_PREREQS, ITEM_TIER, EntityKind, ItemKind, TileKind

TIERS = ("bare", "wood", "stone", "iron")
DEFAULT_TIER_WEIGHTS = (0.4, 0.3, 0.2, 0.1)

# Kinds that may be provisioned next to the spawn point.
NEARBY_KINDS = frozenset(
    [k.value for k in (TileKind.TABLE, TileKind.FURNACE, TileKind.TREE, TileKind.WATER,
                       TileKind.STONE, TileKind.COAL, TileKind.IRON, TileKind.DIAMOND,
                       TileKind.PLANT)]
    + [e.value for e in EntityKind]
)


class InitSpecError(ValueError):
    pass


@dataclass(frozen=True)
class InitSpec:
    """Starting meters, inventory and structures provisioned near spawn.

    ``inventory`` is a tuple of ``(item_name, count)`` pairs so the spec stays
    hashable; use :meth:`make` to build one from a mapping.
    """

    status: tuple[int, int, int, int] = (9, 9, 9, 9)
    inventory: tuple[tuple[str, int], ...] = ()
    nearby: tuple[str, ...] = ()
    tier: str = "bare"

    @classmethod
    def make(cls, inventory=None, status=(9, 9, 9, 9), nearby=(), tier="bare") -> "InitSpec":
        inv = inventory or {}
        items = []
        for item in ItemKind:
            n = int(inv.get(item.value, inv.get(item, 0)))
            if n:
                items.append((item.value, n))
        unknown = {str(getattr(k, "value", k)) for k in inv} - {i.value for i in ItemKind}
        if unknown:
            raise InitSpecError(f"unknown inventory items: {sorted(unknown)}")
        return cls(status=tuple(int(s) for s in status), inventory=tuple(items),
                   nearby=tuple(str(n) for n in nearby), tier=tier)

    def inventory_dict(self) -> dict[str, int]:
        return dict(self.inventory)

    def to_json(self) -> dict:
        return {
            "status": list(self.status),
            "inventory": {k: v for k, v in self.inventory},
            "nearby": list(self.nearby),
            "tier": self.tier,
        }

    @classmethod
    def from_json(cls, data: dict) -> "InitSpec":
        return cls.make(data.get("inventory", {}), tuple(data.get("status", (9, 9, 9, 9))),
                        tuple(data.get("nearby", ())), data.get("tier", "bare"))


def check_consistency(spec: InitSpec) -> None:
    """Raise :class:`InitSpecError` naming the first violated prerequisite."""
    if len(spec.status) != 4 or any(not 0 <= s <= 9 for s in spec.status):
        raise InitSpecError(f"status meters out of range: {spec.status}")
    if spec.status[0] == 0:
        raise InitSpecError("health must be positive at spawn")
    inv = spec.inventory_dict()
    for name, count in inv.items():
        if not 0 <= count <= 9:
            raise InitSpecError(f"inventory count for {name} out of range: {count}")
    for name, count in spec.inventory:
        if count <= 0:
            continue
        for req in ITEM_PREREQS[ItemKind(name)]:
            if inv.get(req.value, 0) <= 0:
                raise InitSpecError(f"missing prerequisite {req.value} for {name}")
    for kind in spec.nearby:
        if kind not in NEARBY_KINDS:
            raise InitSpecError(f"cannot provision {kind!r} near spawn")


def is_consistent(spec: InitSpec) -> bool:
    try:
        check_consistency(spec)
    except InitSpecError:
        return False
    return True


# Per-tier item pools: (item, min, max). Items forced by a tier carry min >= 1.
_TIER_ITEMS = {
    "bare": [],
    "wood": [(ItemKind.WOOD, 0, 4), (ItemKind.SAPLING, 0, 2),
             (ItemKind.WOOD_PICKAXE, 0, 1), (ItemKind.WOOD_SWORD, 0, 1)],
    "stone": [(ItemKind.WOOD, 0, 4), (ItemKind.SAPLING, 0, 2),
              (ItemKind.WOOD_PICKAXE, 1, 1), (ItemKind.WOOD_SWORD, 0, 1),
              (ItemKind.STONE, 0, 4), (ItemKind.COAL, 0, 2),
              (ItemKind.STONE_PICKAXE, 0, 1), (ItemKind.STONE_SWORD, 0, 1)],
    "iron": [(ItemKind.WOOD, 0, 4), (ItemKind.SAPLING, 0, 2),
             (ItemKind.WOOD_PICKAXE, 1, 1), (ItemKind.WOOD_SWORD, 0, 1),
             (ItemKind.STONE, 0, 4), (ItemKind.COAL, 0, 3),
             (ItemKind.STONE_PICKAXE, 1, 1), (ItemKind.STONE_SWORD, 0, 1),
             (ItemKind.IRON, 0, 2), (ItemKind.IRON_PICKAXE, 0, 1)],
}


def randomized_init(rng_seed: int, tier_weights=DEFAULT_TIER_WEIGHTS) -> InitSpec:
    """Sample a tech-tree-consistent start: a progression tier, then items at or below it."""
    rng = random.Random(rng_seed)
    tier_name = rng.choices(TIERS, weights=tier_weights)[0]
    inv: dict[str, int] = {}
    for item, lo, hi in _TIER_ITEMS[tier_name]:
        assert ITEM_TIER[item] <= TIERS.index(tier_name)
        n = rng.randint(lo, hi)
        if n:
            inv[item.value] = n
    status = tuple(rng.randint(4, 9) for _ in range(4))
    nearby: list[str] = []
    if tier_name in ("stone", "iron") and rng.random() < 0.5:
        nearby.append(TileKind.TABLE.value)
        if tier_name == "iron" and rng.random() < 0.5:
            nearby.append(TileKind.FURNACE.value)
    spec = InitSpec.make(inv, status, nearby, tier_name)
    check_consistency(spec)
    return spec
