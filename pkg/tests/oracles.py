"""Independent re-implementations used as test oracles.

Each works from serialized JSON rather than the library's objects and shares
no code path with the function it checks.
"""
from __future__ import annotations

import math
from fractions import Fraction

ENTITIES = {"zombie", "skeleton", "cow"}
HARVEST = {"tree": "wood", "stone": "stone", "coal": "coal", "iron": "iron", "diamond": "diamond",
           "grass": "sapling"}
HARVEST_SKILL = {"tree": "collect_wood", "stone": "collect_stone", "coal": "collect_coal",
                 "iron": "collect_iron", "diamond": "collect_diamond", "grass": "collect_sapling"}
CRAFTS = {"make_wood_pickaxe": "wood_pickaxe", "make_wood_sword": "wood_sword",
          "make_stone_pickaxe": "stone_pickaxe", "make_stone_sword": "stone_sword",
          "make_iron_pickaxe": "iron_pickaxe", "make_iron_sword": "iron_sword"}
PLACE_COST = {"place_stone": ("stone",), "place_table": ("wood",), "place_furnace": ("stone",),
              "place_plant": ("sapling",)}
MOB_SKILL = {"cow": "eat_cow", "zombie": "defeat_zombie", "skeleton": "defeat_skeleton"}


def _entity(obs: dict):
    name = obs["facing"][0]
    return name if name in ENTITIES else None


def _changed(a: dict, b: dict, outcome: dict) -> bool:
    return (a["status"] != b["status"] or a["inventory"] != b["inventory"] or bool(outcome["unlocked"])
            or _entity(a) != _entity(b))


def _cause(a: dict, action: str, outcome: dict, b: dict):
    if outcome["unlocked"]:
        return outcome["unlocked"][0]
    dinv = outcome["inventory_delta"]
    if action in CRAFTS:
        return action if dinv.get(CRAFTS[action], 0) > 0 else None
    if action in PLACE_COST:
        return action if all(dinv.get(k, 0) < 0 for k in PLACE_COST[action]) else None
    if action == "sleep":
        return "wake_up" if b["status"][3] > a["status"][3] and b["status"][3] == 9 else None
    if action != "do":
        return None
    faced = a["facing"][0]
    if faced in HARVEST:
        return HARVEST_SKILL[faced] if dinv.get(HARVEST[faced], 0) > 0 else None
    if faced == "water":
        return "collect_drink" if b["status"][2] > a["status"][2] else None
    if faced == "plant":
        return "eat_plant" if b["status"][1] > a["status"][1] else None
    if faced in ENTITIES and b["facing"][0] != faced:
        return MOB_SKILL[faced]
    return None


def brute_force_segments(traj: dict, length: int = 4) -> list[tuple[int, str, tuple[int, ...]]]:
    """(end step, skill, covered step indices) for every retained segment.

    Scans every step; a caused change is kept unless the very next step is a
    change with the same cause (a run is represented by its last step).
    """
    steps = traj["steps"]
    obs = [s["obs"] for s in steps] + [traj["final_obs"]]
    info = []
    for t, s in enumerate(steps):
        ch = _changed(obs[t], obs[t + 1], s["outcome"])
        info.append((ch, _cause(obs[t], s["action"], s["outcome"], obs[t + 1]) if ch else None))
    out = []
    for t, (ch, cause) in enumerate(info):
        if not ch or cause is None:
            continue
        if t + 1 < len(info) and info[t + 1][0] and info[t + 1][1] == cause:
            continue
        out.append((t, cause, tuple(range(max(0, t - length + 1), t + 1))))
    return out


def recount_ns(trials: list[dict], threshold: float = 0.5) -> tuple[int, dict[str, float]]:
    by_task: dict[str, list[bool]] = {}
    for t in trials:
        if t["kind"] == "ns":
            by_task.setdefault(t["task"], []).append(t["task"] in t["unlocked"] and not t["failed"])
    rates = {k: sum(v) / len(v) for k, v in by_task.items()}
    return sum(1 for r in rates.values() if r >= threshold), rates


def recount_ap(trials: list[dict], n_skills: int = 22) -> tuple[float, float]:
    """Exact mean and standard error of AP-trial progress, each rounded once to float."""
    counts = [len(set(t["unlocked"])) for t in trials if t["kind"] == "ap"]
    n = len(counts)
    mean = Fraction(sum(counts), n_skills * n)
    if n < 2:
        return float(mean), 0.0
    ss = sum((Fraction(c, n_skills) - mean) ** 2 for c in counts)
    return float(mean), math.sqrt(float(ss / (n - 1) / n))


def naive_loss(theta, rows: list[tuple[dict[int, float], int]]) -> float:
    """-sum log softmax, one row at a time, in plain Python floats."""
    total = 0.0
    for x, a in rows:
        z = [sum(theta[k][j] * v for j, v in x.items()) for k in range(len(theta))]
        m = max(z)
        lse = m + math.log(sum(math.exp(zk - m) for zk in z))
        total -= z[a] - lse
    return total


def histogram_recount(unlock_sets: list[set[str]], skills) -> dict[str, int]:
    return {s: sum(1 for u in unlock_sets if s in u) for s in skills}
