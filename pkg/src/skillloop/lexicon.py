"""Frozen vocabulary: skill templates, the instruction lexicon and the PF task catalog.

All three live as versioned JSON under ``skillloop/data`` so a change to any of
them shows up as a data diff rather than a code diff.
"""
from __future__ import annotations

import json
import re
from functools import lru_cache
from importlib import resources

from .craftworld.kinds import Achievement

_TOKEN = re.compile(r"[a-z0-9]+")


def tokenize(text: str) -> list[str]:
    """Lowercase alphanumeric tokens; underscores and punctuation split."""
    return _TOKEN.findall(text.lower())


@lru_cache(maxsize=None)
def load_data(name: str) -> dict:
    with resources.files("skillloop.data").joinpath(name).open("r", encoding="utf-8") as fh:
        return json.load(fh)


def templates() -> dict[Achievement, str]:
    raw = load_data("templates.v1.json")["instructions"]
    return {a: raw[a.value] for a in Achievement}


def template_instruction(skill: Achievement) -> str:
    return templates()[Achievement(skill)]


def pf_catalog() -> tuple[list[str], list[str]]:
    d = load_data("pf_catalog.v1.json")
    return list(d["feasible"]), list(d["infeasible"])


def canonicalize(text: str) -> str | None:
    """Map an instruction to a canonical skill id.

    Returns an :class:`Achievement` value, the id of a recognised concept that
    the world does not support (e.g. ``"place_torch"``), or ``None`` when no
    unique reading exists. Unsupported concepts take precedence: an
    instruction that mentions smelting is about smelting even if it also
    mentions coal.
    """
    toks = set(tokenize(text or ""))
    if not toks:
        return None
    lex = load_data("lexicon.v1.json")
    for concept, words in lex["unsupported"].items():
        if toks & set(words):
            return concept
    best: list[str] = []
    best_groups = 0
    exclude = lex.get("exclude", {})
    for skill, groups in lex["skills"].items():
        if toks & set(exclude.get(skill, ())):
            continue
        if all(toks & set(g) for g in groups):
            if len(groups) > best_groups:
                best, best_groups = [skill], len(groups)
            elif len(groups) == best_groups:
                best.append(skill)
    if len(best) != 1:
        return None
    return best[0]


def parse_skill(text: str) -> Achievement | None:
    """Canonical in-world skill for ``text``, or ``None``."""
    cid = canonicalize(text)
    try:
        return Achievement(cid) if cid is not None else None
    except ValueError:
        return None


def is_skill_id(cid: str | None) -> bool:
    return cid is not None and cid in Achievement._value2member_map_
