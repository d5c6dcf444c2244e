"""Deterministic Crafter-style survival gridworld with text observations."""
from .initspec import InitSpec, InitSpecError, check_consistency, is_consistent, randomized_init
from .kinds import (
    ACHIEVEMENTS,
    ACTION_INDEX,
    ACTIONS,
    N_ACTIONS,
    SKILL_PREREQS,
    TASK_TYPE_OF,
    TASK_TYPES,
    Achievement,
    Action,
    Direction,
    EntityKind,
    ItemKind,
    TileKind,
    tier,
)
from .world import (
    Observation,
    StepOutcome,
    WorldState,
    new_world,
    observe,
    render_text,
    state_digest,
    state_from_json,
    state_to_json,
    step,
    terrain_histogram,
)
