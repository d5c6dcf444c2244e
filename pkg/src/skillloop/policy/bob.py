"""The trainable policy: argmax of the linear softmax model over the 17 actions."""
from __future__ import annotations

from ..craftworld import ACTIONS, Action, Observation, WorldState, render_text
from ..trainer.model import LinearSoftmaxModel
from .base import PolicyContext


class BobPolicy:
    def __init__(self, model: LinearSoftmaxModel, policy_id: str = "bob"):
        self.model = model
        self.policy_id = policy_id

    def reset(self, episode_seed: int) -> None:
        pass

    def decide(self, context: PolicyContext, obs: Observation, state: WorldState | None = None) -> Action:
        scores = self.model.scores(context.goal or "", context.history, render_text(obs))
        return ACTIONS[int(scores.argmax())]
