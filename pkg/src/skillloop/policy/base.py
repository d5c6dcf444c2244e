"""Policy interface, action parsing and the epsilon-noise wrapper."""
from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, field
from typing import Protocol, runtime_checkable

from ..craftworld import ACTIONS, Action, Observation, WorldState

log = logging.getLogger(__name__)

DEFAULT_HISTORY = 3


class PolicyError(RuntimeError):
    """A policy could not produce an action (e.g. endpoint down after retries)."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class ParseFailure(ValueError):
    def __init__(self, text: str):
        super().__init__(f"no action name found in reply: {text!r}")
        self.text = text


@dataclass
class PolicyContext:
    """What a policy sees besides the current observation.

    ``history`` holds ``(observation_text, action_name)`` pairs, oldest first.
    ``goal`` and ``feedback`` are carried verbatim.
    """

    history: list[tuple[str, str]] = field(default_factory=list)
    goal: str | None = None
    feedback: object | None = None
    max_history: int = DEFAULT_HISTORY

    def push(self, obs_text: str, action: Action | str) -> None:
        if self.max_history <= 0:
            return
        self.history.append((obs_text, Action(action).value))
        if len(self.history) > self.max_history:
            del self.history[: len(self.history) - self.max_history]


@runtime_checkable
class Policy(Protocol):
    policy_id: str

    def reset(self, episode_seed: int) -> None: ...

    def decide(self, context: PolicyContext, obs: Observation, state: WorldState | None = None) -> Action: ...


# Longest names first so "make_wood_pickaxe" wins over any shorter overlap.
_BY_LENGTH = sorted((a.value for a in ACTIONS), key=len, reverse=True)
_ACTION_RE = re.compile("|".join(re.escape(n) for n in _BY_LENGTH))
_PREFIX_RE = re.compile(r"^\s*action\s*:\s*", re.IGNORECASE)


def parse_action(reply_text: str) -> Action:
    """Extract a canonical action name from free text.

    Case-insensitive; an optional ``Action:`` prefix is stripped. Spaces or
    hyphens inside a name are accepted (``"move up"``). Raises
    :class:`ParseFailure` when no name is present.
    """
    text = _PREFIX_RE.sub("", reply_text or "").lower()
    norm = re.sub(r"[\s\-]+", "_", text)
    m = _ACTION_RE.search(norm)
    if m is None:
        raise ParseFailure(reply_text)
    # the earliest match may be a prefix of a longer name starting at the same spot
    start = m.start()
    for name in _BY_LENGTH:
        if norm.startswith(name, start):
            return Action(name)
    return Action(m.group(0))


class NoopPolicy:
    policy_id = "noop"

    def reset(self, episode_seed: int) -> None:
        pass

    def decide(self, context, obs, state=None) -> Action:
        return Action.NOOP


class EpsilonNoise:
    """Replace the wrapped policy's action with a uniform one with probability ``epsilon``.

    The random stream is re-seeded per episode, so an episode's noise depends
    only on its seed.
    """

    def __init__(self, base, epsilon: float, salt: int = 0x5EED):
        if not 0.0 <= epsilon <= 1.0:
            raise ValueError(f"epsilon must lie in [0, 1], got {epsilon}")
        self.base = base
        self.epsilon = float(epsilon)
        self.salt = salt
        self._rng = random.Random(salt)
        self.policy_id = f"{getattr(base, 'policy_id', 'policy')}+eps{self.epsilon:g}"

    def reset(self, episode_seed: int) -> None:
        self._rng = random.Random(episode_seed * 1_000_003 + self.salt)
        self.base.reset(episode_seed)

    def decide(self, context, obs, state=None) -> Action:
        if self.epsilon >= 1.0 or self._rng.random() < self.epsilon:
            return ACTIONS[self._rng.randrange(len(ACTIONS))]
        return self.base.decide(context, obs, state)


class RandomPolicy(EpsilonNoise):
    """Uniform over all 17 actions."""

    def __init__(self, salt: int = 0x5EED):
        super().__init__(NoopPolicy(), 1.0, salt)
        self.policy_id = "random"
