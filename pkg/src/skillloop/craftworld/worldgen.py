"""Terrain generation from layered value noise, with a reachability audit."""
from __future__ import annotations

from collections import deque
from functools import lru_cache

import numpy as np

from .kinds import EntityKind, TileKind

SIZE = 64
TILE_CODES = {k: i for i, k in enumerate(TileKind)}
TILES = tuple(TileKind)
MAX_ATTEMPTS = 8

G = TILE_CODES[TileKind.GRASS]
_MINABLE = {TILE_CODES[k] for k in (TileKind.STONE, TileKind.COAL, TileKind.IRON, TileKind.DIAMOND)}
_OPEN = {TILE_CODES[k] for k in (TileKind.GRASS, TileKind.SAND, TileKind.PATH)}
AUDIT_KINDS = (TileKind.TREE, TileKind.WATER, TileKind.STONE, TileKind.COAL,
               TileKind.IRON, TileKind.DIAMOND)


def _value_noise(rng: np.random.Generator, size: int, cell: int) -> np.ndarray:
    n = size // cell + 2
    coarse = rng.random((n, n))
    coords = np.arange(size) / cell
    i0 = np.floor(coords).astype(int)
    f = coords - i0
    f = f * f * (3 - 2 * f)
    a = coarse[np.ix_(i0, i0)]
    b = coarse[np.ix_(i0, i0 + 1)]
    c = coarse[np.ix_(i0 + 1, i0)]
    d = coarse[np.ix_(i0 + 1, i0 + 1)]
    fy = f[:, None]
    fx = f[None, :]
    return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy


def _layered(rng: np.random.Generator, size: int, cells: tuple[int, ...]) -> np.ndarray:
    total = np.zeros((size, size))
    weight = 0.0
    for octave, cell in enumerate(cells):
        w = 0.5 ** octave
        total += w * _value_noise(rng, size, cell)
        weight += w
    return total / weight


def _generate_once(rng: np.random.Generator, size: int) -> np.ndarray:
    water = _layered(rng, size, (16, 8))
    mountain = _layered(rng, size, (12, 6))
    forest = _layered(rng, size, (8, 4))
    tunnels = _layered(rng, size, (6, 3))
    u = rng.random((size, size))
    c = size // 2
    yy, xx = np.mgrid[0:size, 0:size]
    start = np.maximum(np.abs(xx - c), np.abs(yy - c))
    # keep spawn surroundings open
    mountain = mountain - np.clip(0.25 - 0.03 * start, 0, None)
    water = water - np.clip(0.3 - 0.04 * start, 0, None)

    grid = np.full((size, size), G, dtype=np.uint8)
    t = TILE_CODES
    is_water = water > 0.64
    is_sand = (water > 0.6) & ~is_water
    is_mtn = (mountain > 0.6) & ~is_water & ~is_sand
    grid[is_sand] = t[TileKind.SAND]
    grid[is_water] = t[TileKind.WATER]
    grid[is_mtn] = t[TileKind.STONE]
    tunnel = is_mtn & (tunnels > 0.62)
    grid[tunnel] = t[TileKind.PATH]
    ore = is_mtn & ~tunnel
    grid[ore & (u < 0.07)] = t[TileKind.COAL]
    grid[ore & (mountain > 0.66) & (u > 0.97)] = t[TileKind.IRON]
    grid[ore & (mountain > 0.7) & (u > 0.93) & (u < 0.935)] = t[TileKind.DIAMOND]
    grid[tunnel & (mountain > 0.74) & (u < 0.04)] = t[TileKind.LAVA]
    plain = ~is_water & ~is_sand & ~is_mtn
    grid[plain & (forest > 0.64) & (u > 0.5)] = t[TileKind.TREE]
    grid[plain & (forest <= 0.64) & (u < 0.008)] = t[TileKind.TREE]
    grid[start <= 2] = G
    return grid


def _component(grid: np.ndarray, spawn: tuple[int, int]) -> np.ndarray:
    """Cells reachable from spawn when minable blocks count as passable."""
    size = grid.shape[0]
    seen = np.zeros_like(grid, dtype=bool)
    passable = _OPEN | _MINABLE
    q = deque([spawn])
    seen[spawn[1], spawn[0]] = True
    while q:
        x, y = q.popleft()
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            nx, ny = x + dx, y + dy
            if 0 < nx < size - 1 and 0 < ny < size - 1 and not seen[ny, nx]:
                if grid[ny, nx] in passable:
                    seen[ny, nx] = True
                    q.append((nx, ny))
    return seen


def _frontier(reach: np.ndarray) -> np.ndarray:
    near = reach.copy()
    near[1:, :] |= reach[:-1, :]
    near[:-1, :] |= reach[1:, :]
    near[:, 1:] |= reach[:, :-1]
    near[:, :-1] |= reach[:, 1:]
    return near


def audit(grid: np.ndarray, spawn: tuple[int, int]) -> list[TileKind]:
    """Return the resource kinds that cannot be reached from ``spawn``."""
    near = _frontier(_component(grid, spawn))
    missing = []
    for kind in AUDIT_KINDS:
        if not np.any(near & (grid == TILE_CODES[kind])):
            missing.append(kind)
    return missing


def _force_place(grid: np.ndarray, spawn, missing, rng: np.random.Generator) -> None:
    reach = _component(grid, spawn)
    stone_like = np.argwhere(reach & np.isin(grid, list(_MINABLE)))
    open_cells = np.argwhere(reach & (grid == G))
    for kind in missing:
        pool = stone_like if kind in (TileKind.COAL, TileKind.IRON, TileKind.DIAMOND, TileKind.STONE) \
            and len(stone_like) else open_cells
        y, x = pool[rng.integers(len(pool))]
        if abs(int(x) - spawn[0]) + abs(int(y) - spawn[1]) <= 1:
            continue
        grid[y, x] = TILE_CODES[kind]


def spawn_point(size: int = SIZE) -> tuple[int, int]:
    return size // 2, size // 2


def generate_terrain(seed: int, size: int = SIZE) -> tuple[np.ndarray, int]:
    """Build terrain for ``seed``; returns (a fresh writable grid, attempts_used).

    Up to ``MAX_ATTEMPTS`` seed-derived layouts are tried until the reachability
    audit passes; the last attempt patches any missing kind in place.
    """
    grid, attempts = _cached_terrain(seed, size)
    return grid.copy(), attempts


@lru_cache(maxsize=64)
def _cached_terrain(seed: int, size: int) -> tuple[np.ndarray, int]:
    spawn = spawn_point(size)
    grid = None
    for attempt in range(MAX_ATTEMPTS):
        rng = np.random.default_rng([seed & 0xFFFFFFFF, attempt])
        grid = _generate_once(rng, size)
        missing = audit(grid, spawn)
        if not missing:
            grid.setflags(write=False)
            return grid, attempt + 1
    _force_place(grid, spawn, missing, rng)
    grid.setflags(write=False)
    return grid, MAX_ATTEMPTS


def initial_entities(grid: np.ndarray, seed: int) -> list[tuple[EntityKind, int, int]]:
    """Initial mobs: cows and zombies on grass, skeletons in tunnels."""
    rng = np.random.default_rng([seed & 0xFFFFFFFF, 1001])
    size = grid.shape[0]
    cx, cy = spawn_point(size)
    u = rng.random(grid.shape)
    ys, xs = np.mgrid[0:size, 0:size]
    d = np.maximum(np.abs(xs - cx), np.abs(ys - cy))
    inner = np.zeros(grid.shape, dtype=bool)
    inner[1:size - 1, 1:size - 1] = True
    inner &= d > 1
    grass = grid == G
    cow = inner & grass & (u < 0.012)
    zombie = inner & grass & (d > 6) & (u > 0.995)
    skeleton = inner & (grid == TILE_CODES[TileKind.PATH]) & (u < 0.06)
    kinds = np.full(grid.shape, -1)
    kinds[skeleton] = 2
    kinds[zombie] = 1
    kinds[cow] = 0
    table = (EntityKind.COW, EntityKind.ZOMBIE, EntityKind.SKELETON)
    # row-major order, matching a y-then-x scan
    return [(table[kinds[y, x]], int(x), int(y)) for y, x in zip(*np.nonzero(kinds >= 0))]
