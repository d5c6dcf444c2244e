from __future__ import annotations

import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from skillloop.craftworld import Direction, ItemKind, TileKind, new_world  # noqa: E402
from skillloop.craftworld.world import _ITEMS  # noqa: E402
from skillloop.craftworld.worldgen import TILE_CODES  # noqa: E402

GOLDEN = Path(__file__).parent / "golden"
UPDATE_GOLDEN = os.environ.get("SKILLLOOP_UPDATE_GOLDEN") == "1"


def check_golden(name: str, text: str) -> None:
    """Compare against ``tests/golden/<name>``; SKILLLOOP_UPDATE_GOLDEN=1 rewrites it."""
    path = GOLDEN / name
    if UPDATE_GOLDEN or not path.exists():
        if not UPDATE_GOLDEN:
            pytest.fail(f"golden file {path} is missing; rerun with SKILLLOOP_UPDATE_GOLDEN=1 to freeze it")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text, encoding="utf-8")
    assert text == path.read_text(encoding="utf-8")


def make_state(tiles=None, inventory=None, status=(9, 9, 9, 9), facing=Direction.SOUTH, entities=(),
               seed=42, fill=TileKind.GRASS, radius=5):
    """A seed-42 world with the spawn neighbourhood overwritten.

    ``tiles`` maps (dx, dy) offsets from the agent to tile kinds; every other
    cell within ``radius`` is ``fill``. Mobs are removed unless given.
    """
    base = new_world(seed)
    terrain = base.terrain.copy()
    ax, ay = base.pos
    terrain[ay - radius:ay + radius + 1, ax - radius:ax + radius + 1] = TILE_CODES[fill]
    for (dx, dy), kind in (tiles or {}).items():
        terrain[ay + dy, ax + dx] = TILE_CODES[TileKind(kind)]
    terrain.setflags(write=False)
    inv = [0] * len(_ITEMS)
    for name, n in (inventory or {}).items():
        inv[_ITEMS.index(ItemKind(name))] = n
    return replace(base, terrain=terrain, entities=tuple(entities), facing=facing, status=tuple(status),
                   inventory=tuple(inv))


@pytest.fixture
def state_factory():
    return make_state


@pytest.fixture
def rng():
    return np.random.default_rng(0)


# ------------------------------------------------------------ acceptance reporting

_CRITERIA: dict[int, dict] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, title): one of the numbered acceptance criteria")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    n, title = marker.args
    entry = _CRITERIA.setdefault(n, {"title": title, "status": "PASS", "details": ""})
    if rep.failed:
        entry["status"] = "FAIL"
    if rep.when == "call":
        entry["details"] = "; ".join(str(v) for k, v in item.user_properties if k == "measured")
        if rep.failed and not entry["details"]:
            entry["details"] = str(rep.longrepr).splitlines()[-1][:160]


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_CRITERIA):
        e = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n:2d} {e['status']}  {e['title']}: {e['details']}")
