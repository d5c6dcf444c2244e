from __future__ import annotations

from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from conftest import make_state
from skillloop.craftworld import ACHIEVEMENTS, ACTIONS, Achievement, Action, TileKind, observe, step
from skillloop.feedback import Feedback
from skillloop.policy import (
    BobPolicy,
    EpsilonNoise,
    NoopPolicy,
    ParseFailure,
    PolicyContext,
    RandomPolicy,
    ScriptedExpert,
    ScriptedExpertConfig,
    condition_on_feedback,
    parse_action,
)
from skillloop.policy.prompts import render, render_eval_prompt, render_explore_prompt
from skillloop.trainer.model import LinearSoftmaxModel

# ------------------------------------------------------------ parsing


@pytest.mark.parametrize("reply,expected", [
    ("move_up", Action.MOVE_UP),
    ("Action: Move_Up", Action.MOVE_UP),
    ("action:   DO", Action.DO),
    ("I think I should make wood pickaxe now.", Action.MAKE_WOOD_PICKAXE),
    ("place-table", Action.PLACE_TABLE),
    ("make_iron_sword", Action.MAKE_IRON_SWORD),
    ("noop\n", Action.NOOP),
])
def test_parse_action_examples(reply, expected):
    assert parse_action(reply) is expected


@pytest.mark.parametrize("reply", ["", "I am not sure", "42", "jump"])
def test_parse_action_failure(reply):
    with pytest.raises(ParseFailure):
        parse_action(reply)


# filler that cannot contain any action name: digits and punctuation only
_filler = st.text(alphabet="0123456789.,!?;()[]", max_size=12)


@given(action=st.sampled_from(ACTIONS), before=_filler, after=_filler, upper=st.booleans())
def test_parse_action_finds_name_in_noise(action, before, after, upper):
    name = action.value.upper() if upper else action.value
    assert parse_action(f"{before} {name} {after}") is action


# ------------------------------------------------------------ noise


def test_epsilon_one_is_uniform_over_actions():
    pol = EpsilonNoise(NoopPolicy(), 1.0)
    counts = Counter()
    for ep in range(20):
        pol.reset(ep)
        for _ in range(850):
            counts[pol.decide(PolicyContext(), None)] += 1
    observed = [counts[a] for a in ACTIONS]
    assert stats.chisquare(observed).pvalue > 0.001


def test_epsilon_zero_defers_to_base():
    pol = EpsilonNoise(NoopPolicy(), 0.0)
    pol.reset(3)
    assert all(pol.decide(PolicyContext(), None) is Action.NOOP for _ in range(200))


def test_noise_depends_only_on_episode_seed():
    a, b = RandomPolicy(), RandomPolicy()
    a.reset(11)
    b.reset(11)
    assert [a.decide(None, None) for _ in range(50)] == [b.decide(None, None) for _ in range(50)]


def test_epsilon_range_checked():
    with pytest.raises(ValueError):
        EpsilonNoise(NoopPolicy(), 1.5)


# ------------------------------------------------------------ trained model policy


def test_zero_model_picks_first_action():
    pol = BobPolicy(LinearSoftmaxModel.zeros(dim=256))
    assert pol.decide(PolicyContext(goal="collect wood"), observe(make_state())) is Action.MOVE_LEFT


# ------------------------------------------------------------ scripted expert


def _greedy(skill: Achievement) -> ScriptedExpert:
    w = {a: (1.0 if a is skill else 0.01) for a in ACHIEVEMENTS}
    return ScriptedExpert(ScriptedExpertConfig.from_weights(w, priority="greedy"))


def test_expert_harvests_faced_tree():
    s = make_state({(0, 1): TileKind.TREE})
    assert _greedy(Achievement.COLLECT_WOOD).decide(PolicyContext(), observe(s), s) is Action.DO


def test_expert_walks_shortest_path_to_tree():
    s = make_state({(3, 0): TileKind.TREE})
    assert _greedy(Achievement.COLLECT_WOOD).decide(PolicyContext(), observe(s), s) is Action.MOVE_RIGHT
    s = make_state({(0, -3): TileKind.TREE})
    assert _greedy(Achievement.COLLECT_WOOD).decide(PolicyContext(), observe(s), s) is Action.MOVE_UP


def test_expert_routes_around_water():
    # a water wall east of the agent with one gap two rows down
    tiles = {(1, dy): TileKind.WATER for dy in range(-5, 6) if dy != 2}
    tiles[(3, 0)] = TileKind.TREE
    s = make_state(tiles)
    assert _greedy(Achievement.COLLECT_WOOD).decide(PolicyContext(), observe(s), s) is Action.MOVE_DOWN


def test_parseable_goal_overrides_weights():
    s = make_state({(0, 1): TileKind.TREE, (1, 0): TileKind.WATER}, status=(9, 9, 5, 9))
    expert = _greedy(Achievement.COLLECT_DRINK)
    assert expert.decide(PolicyContext(goal="collect wood"), observe(s), s) is Action.DO
    assert expert.decide(PolicyContext(), observe(s), s) is Action.MOVE_RIGHT


def test_expert_reaches_a_wood_pickaxe():
    s = make_state({(0, 1): TileKind.TREE})
    expert = _greedy(Achievement.MAKE_WOOD_PICKAXE)
    expert.reset(0)
    for _ in range(40):
        s, o = step(s, expert.decide(PolicyContext(), observe(s), s))
        if Achievement.MAKE_WOOD_PICKAXE in s.unlocked:
            break
    assert Achievement.MAKE_WOOD_PICKAXE in s.unlocked
    assert Achievement.PLACE_TABLE in s.unlocked


def test_expert_needs_state():
    with pytest.raises(ValueError):
        ScriptedExpert().decide(PolicyContext(), observe(make_state()), None)


def test_expert_is_deterministic_at_epsilon_zero():
    s = make_state({(2, 2): TileKind.TREE})
    runs = []
    for _ in range(2):
        e = ScriptedExpert(ScriptedExpertConfig(explore_weight=0.3))
        e.reset(5)
        st_, acts = s, []
        for _ in range(30):
            a = e.decide(PolicyContext(), None, st_)
            acts.append(a)
            st_, _ = step(st_, a)
        runs.append(acts)
    assert runs[0] == runs[1]


def test_config_validation():
    with pytest.raises(ValueError):
        ScriptedExpertConfig(weights=(1.0,) * 3)
    with pytest.raises(ValueError):
        ScriptedExpertConfig(weights=(0.0,) * len(ACHIEVEMENTS))
    with pytest.raises(ValueError):
        ScriptedExpertConfig(priority="other")
    cfg = ScriptedExpertConfig(explore_weight=0.3)
    assert ScriptedExpertConfig.from_json(cfg.to_json()) == cfg


# ------------------------------------------------------------ conditioning


def _fb(targets):
    return Feedback("analysis", "Focus on something.", targets, 0)


def test_conditioning_boosts_targets_and_normalizes():
    base = ScriptedExpertConfig()
    cond = condition_on_feedback(base, _fb(["collect_stone", "place_furnace"]), beta=5.0)
    assert sum(cond.weights) == pytest.approx(1.0)
    total = sum(base.weights) + 4 * (base.weight(Achievement.COLLECT_STONE) + base.weight(Achievement.PLACE_FURNACE))
    for a in ACHIEVEMENTS:
        factor = 5.0 if a in (Achievement.COLLECT_STONE, Achievement.PLACE_FURNACE) else 1.0
        assert cond.weight(a) == pytest.approx(base.weight(a) * factor / total)


def test_conditioning_without_targets_is_identity():
    base = ScriptedExpertConfig()
    assert condition_on_feedback(base, None) is base
    assert condition_on_feedback(base, _fb([])) is base


def test_conditioning_raises_targets_in_greedy_order():
    base = ScriptedExpertConfig(priority="greedy")
    cond = condition_on_feedback(base, _fb(["collect_diamond"]), beta=1000.0)
    assert ScriptedExpert(cond).priority_order(make_state())[0] is Achievement.COLLECT_DIAMOND


# ------------------------------------------------------------ prompts


def test_prompts_insert_goal_and_feedback_verbatim():
    msgs = render_explore_prompt("OBS", [("PREV", "noop")], "- Focus on stone.", "collect stone")
    assert "- Focus on stone." in msgs[0]["content"]
    assert "Task: collect stone" in msgs[1]["content"]
    assert "PREV\nAction: noop" in msgs[1]["content"]
    assert all(a.value in msgs[0]["content"] for a in ACTIONS)


def test_eval_prompt_is_a_single_string_without_empty_history():
    p = render_eval_prompt("collect wood", "OBS")
    assert "Recent steps" not in p and p.count("Task: collect wood") == 1


def test_render_rejects_unknown_template():
    with pytest.raises(ValueError):
        render("unknown")
