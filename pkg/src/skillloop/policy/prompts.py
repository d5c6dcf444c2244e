"""Prompt templates for the chat-endpoint roles: explore, relabel, evaluate, feedback.

Each renderer returns a chat message list ``[{"role", "content"}, ...]``.
Goal and feedback texts are inserted verbatim.
"""
from __future__ import annotations

from ..craftworld import ACTIONS

TEMPLATE_IDS = ("explore", "relabel", "evaluate", "feedback")

# Used when no feedback exists yet (first exploration round).
DEFAULT_FEEDBACK = "- Keep yourself alive and find out what this world lets you gather, place and craft."

# Open-ended instruction for achievement-progress evaluation.
OPEN_ENDED_INSTRUCTION = (
    "Make as much progress as you can in this world: gather resources, craft better tools and survive."
)

_ACTION_HELP = {
    "noop": "wait one step",
    "move_left": "step one tile west",
    "move_right": "step one tile east",
    "move_up": "step one tile north",
    "move_down": "step one tile south",
    "do": "use the tile you face: gather a material, drink from water, hit a creature or eat a cow",
    "sleep": "rest to refill energy",
    "place_stone": "put a stone on the tile you face",
    "place_table": "build a crafting table on the tile you face (costs wood)",
    "place_furnace": "build a furnace on the tile you face (needs a table nearby, costs stone)",
    "place_plant": "plant a sapling on the grass you face",
    "make_wood_pickaxe": "craft a wood pickaxe next to a table, using wood",
    "make_stone_pickaxe": "craft a stone pickaxe next to a table, using wood and stone",
    "make_iron_pickaxe": "craft an iron pickaxe next to a table and furnace, using wood, coal and iron",
    "make_wood_sword": "craft a wood sword next to a table, using wood",
    "make_stone_sword": "craft a stone sword next to a table, using wood and stone",
    "make_iron_sword": "craft an iron sword next to a table and furnace, using wood, coal and iron",
}
assert set(_ACTION_HELP) == {a.value for a in ACTIONS}

_RULES = """### Rules of thumb
- Check your inventory before acting and pick the next step that builds on it.
- If the last observation did not change after an action, that action did nothing; try something else.
- When a status meter runs low, eat, drink, sleep or fight back first.
- Stone, coal, iron and diamond need a suitable pickaxe.
- Tables, furnaces, plants and stones can only be placed on grass, sand or path."""

_REPLY = "Reply with exactly one action name from the list."


def action_catalog() -> str:
    lines = ["### Actions"]
    for a in ACTIONS:
        lines.append(f"- {a.value}: {_ACTION_HELP[a.value]}")
    return "\n".join(lines)


def _history_block(history) -> str:
    if not history:
        return ""
    parts = ["### Recent steps (oldest first)"]
    for i, (obs_text, action) in enumerate(history, 1):
        parts.append(f"[{i}]\n{obs_text}\nAction: {action}")
    return "\n".join(parts) + "\n\n"


def render_explore_prompt(obs_text: str, history=(), feedback: str | None = None,
                          goal: str | None = None) -> list[dict]:
    system = (
        "You control an agent in a grid survival game. Explore, stay alive and try out what the world allows.\n\n"
        f"{action_catalog()}\n\n{_RULES}\n\n### Feedback from Previous Round\n"
        f"{feedback if feedback else DEFAULT_FEEDBACK}"
    )
    user = _history_block(history) + obs_text
    if goal:
        user += f"\n\nTask: {goal}"
    return [{"role": "system", "content": system}, {"role": "user", "content": user + "\n\n" + _REPLY}]


def render_eval_prompt(instruction: str, obs_text: str, history=()) -> str:
    """Single-string prompt: also the ``prompt`` field of exported training data."""
    return (
        "You control an agent in a grid survival game and must carry out the task below.\n\n"
        f"{action_catalog()}\n\n{_RULES}\n\n"
        f"{_history_block(history)}{obs_text}\n\nTask: {instruction}\n\n{_REPLY}"
    )


def render_evaluate_messages(instruction: str, obs_text: str, history=()) -> list[dict]:
    return [{"role": "user", "content": render_eval_prompt(instruction, obs_text, history)}]


def render_relabel_prompt(steps) -> list[dict]:
    """``steps``: (observation_text, action) pairs, oldest first."""
    system = (
        "You read short stretches of play from a grid survival game and name the goal the player was after.\n"
        "- The last step matters most: it shows what the player just achieved.\n"
        "- 'do' acts only on the tile being faced: gathering a material, taking a sapling from grass, "
        "drinking water, hitting a creature or eating a cow.\n"
        "- An action starting with 'make' next to a table or furnace means a tool was crafted.\n"
        "Answer with one short imperative instruction of at most ten words."
    )
    body = []
    for i, (obs_text, action) in enumerate(steps, 1):
        body.append(f"[{i}]\n{obs_text}\nAction: {action}")
    return [{"role": "system", "content": system}, {"role": "user", "content": "\n\n".join(body)}]


def render_feedback_prompt(summary: str) -> list[dict]:
    system = (
        "You review how a trained agent performed in a grid survival game and advise the explorer "
        "that collects its training data.\n"
        "Return only a JSON object with two string fields:\n"
        '{"behavior_analysis": "what the agent can and cannot do yet",\n'
        ' "next_iteration_advice": "one sentence beginning with \'Focus on\' naming the skills to practise next"}\n'
        "Base the advice on what the agent already masters and pick the next skills it is ready for."
    )
    return [{"role": "system", "content": system}, {"role": "user", "content": summary}]


def render(template_id: str, **kwargs) -> list[dict]:
    if template_id == "explore":
        return render_explore_prompt(**kwargs)
    if template_id == "relabel":
        return render_relabel_prompt(**kwargs)
    if template_id == "evaluate":
        return render_evaluate_messages(**kwargs)
    if template_id == "feedback":
        return render_feedback_prompt(**kwargs)
    raise ValueError(f"unknown template id {template_id!r}")
