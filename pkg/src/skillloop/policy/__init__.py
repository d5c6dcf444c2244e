"""Policies: scripted expert, LLM client policy and the trained Bob model."""
from .base import (
    DEFAULT_HISTORY,
    EpsilonNoise,
    NoopPolicy,
    ParseFailure,
    Policy,
    PolicyContext,
    PolicyError,
    RandomPolicy,
    parse_action,
)
from .expert import (
    ALICE_EXPLORE_WEIGHT,
    DEFAULT_BOOST,
    ScriptedExpert,
    ScriptedExpertConfig,
    alice_config,
    baseline_weights,
    condition_on_feedback,
)
from .bob import BobPolicy
