"""Hashed sparse features of (instruction, history, observation text).

Besides unigram and bigram tokens, the observation text is parsed into a few
relational cues: what lies in which direction, what is faced, what is held.
Those cues are also crossed with the instruction's content words, so a linear
model can tie "stone" in the instruction to a stone seen to the east.
"""
from __future__ import annotations

import re
import zlib
from dataclasses import dataclass

import numpy as np

DEFAULT_DIM = 1 << 16

_TOKEN = re.compile(r"[a-z0-9]+")
_SEE = re.compile(r"^- ([a-z_]+) (\d+) steps to your ([a-z\-]+)$")
_FACING = re.compile(r"^You are facing ([a-z_]+) at your front \(([a-z]+) direction\)$")
_METER = re.compile(r"^- (health|food|drink|energy): (\d+)/9$")
_ITEM = re.compile(r"^- ([a-z_]+): (\d+)$")

STOPWORDS = frozenset(
    "a an the and to of from for with in on at by you your until it its then".split()
)

def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


@dataclass(frozen=True)
class ParsedObs:
    meters: tuple[tuple[str, int], ...]
    items: tuple[tuple[str, int], ...]
    seen: tuple[tuple[str, int, str], ...]
    facing: str
    facing_dir: str


def parse_obs_text(text: str) -> ParsedObs:
    meters, items, seen = [], [], []
    facing, facing_dir = "none", "none"
    section = None
    for line in text.splitlines():
        if line.startswith("Your status"):
            section = "status"
        elif line.startswith("Your inventory"):
            section = "inventory"
        elif line.startswith("You see"):
            section = "see"
        elif line.startswith("You are facing"):
            m = _FACING.match(line)
            if m:
                facing, facing_dir = m.group(1), m.group(2)
        elif line.startswith("- "):
            if section == "status" and (m := _METER.match(line)):
                meters.append((m.group(1), int(m.group(2))))
            elif section == "inventory" and (m := _ITEM.match(line)):
                items.append((m.group(1), int(m.group(2))))
            elif section == "see" and (m := _SEE.match(line)):
                seen.append((m.group(1), int(m.group(2)), m.group(3)))
    return ParsedObs(tuple(meters), tuple(items), tuple(seen), facing, facing_dir)


def _ngrams(prefix: str, tokens: list[str], out: list[str]) -> None:
    out.extend(f"{prefix}:{t}" for t in tokens)
    out.extend(f"{prefix}2:{a}_{b}" for a, b in zip(tokens, tokens[1:]))


def feature_strings(instruction: str, history, obs_text: str) -> list[str]:
    """The un-hashed feature names (with repetition) for one decision."""
    out: list[str] = ["bias"]
    itoks = tokenize(instruction)
    _ngrams("i", itoks, out)
    _ngrams("o", tokenize(obs_text), out)
    obs = parse_obs_text(obs_text)
    words = sorted({t for t in itoks if t not in STOPWORDS})

    rel = [f"f:{obs.facing}", f"fd:{obs.facing_dir}|f:{obs.facing}"]
    for name, v in obs.meters:
        if v <= 3:
            rel.append(f"low:{name}")
    for name, _ in obs.items:
        rel.append(f"inv:{name}")
    near = []
    for name, d, direction in obs.seen:
        rel.append(f"s:{name}@{direction}")
        if d == 1:
            rel.append(f"adj:{name}@{direction}")
        # crafting reach is the 3x3 block, so a diagonal neighbour counts too
        if d == 1 or (d == 2 and "-" in direction):
            near.append(f"near:{name}")
    rel.extend(near)
    # history slots, 1 = most recent
    for k, (h_obs, h_action) in enumerate(reversed(list(history)), 1):
        rel.append(f"h{k}:{h_action}")
        m = _FACING.search(h_obs.rsplit("\n", 1)[-1]) if h_obs else None
        if k == 1:
            rel.append(f"h1:{h_action}|f:{obs.facing}")
            if m:
                rel.append(f"h1f:{m.group(1)}|f:{obs.facing}")
    out.extend(rel)
    for w in words:
        out.extend(f"x:{w}|{r}" for r in rel)
    # word pairs pick out one recipe among those sharing a material or a tool
    key = [f"f:{obs.facing}"] + near + [f"inv:{name}" for name, _ in obs.items]
    for a, b in zip(words, words[1:]):
        out.extend(f"xx:{a}_{b}|{r}" for r in key)
    return out


def hash_index(name: str, dim: int = DEFAULT_DIM) -> int:
    return zlib.crc32(name.encode("utf-8")) % dim


def featurize(instruction: str, history, obs_text: str, dim: int = DEFAULT_DIM) -> tuple[np.ndarray, np.ndarray]:
    """Sorted unique column indices and their values (counts scaled to unit L2 norm)."""
    idx = np.fromiter((hash_index(s, dim) for s in feature_strings(instruction, history, obs_text)),
                      dtype=np.int64)
    cols, counts = np.unique(idx, return_counts=True)
    vals = counts.astype(np.float64)
    vals /= np.sqrt(np.dot(vals, vals))
    return cols, vals
