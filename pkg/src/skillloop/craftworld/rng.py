"""Counter-based randomness.

Every random draw in the simulator is a pure function of integer keys, so a
world state never needs to carry a mutable generator and replays are exact on
every platform.
"""
from __future__ import annotations

_MASK = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return z ^ (z >> 31)


def mix(*keys: int) -> int:
    h = 0x2545F4914F6CDD1D
    for k in keys:
        h = splitmix64(h ^ (k & _MASK))
    return h


def extend(h: int, *keys: int) -> int:
    """Continue a ``mix`` hash: ``extend(mix(*a), *b) == mix(*a, *b)``."""
    for k in keys:
        h = splitmix64(h ^ (k & _MASK))
    return h


def uniform(*keys: int) -> float:
    """Deterministic float in [0, 1) keyed by ``keys``."""
    return (mix(*keys) >> 11) * (1.0 / (1 << 53))


def randint(n: int, *keys: int) -> int:
    return mix(*keys) % n
