from __future__ import annotations

import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import histogram_recount
from skillloop.craftworld import ACHIEVEMENTS, Achievement, InitSpec, tier
from skillloop.evaluator import run_trial
from skillloop.feedback import (
    ADVICE_PREFIX,
    EmptyInputError,
    Feedback,
    FeedbackSchemaError,
    LlmFeedbackComposer,
    SkillHistogram,
    analyze,
    collect_rollouts,
    generate_feedback,
    parse_feedback_reply,
    select_targets,
    skill_types,
    validate_feedback,
)
from skillloop.policy import ScriptedExpert, ScriptedExpertConfig, alice_config, condition_on_feedback

A = Achievement
N = 20


def hist(**rates) -> SkillHistogram:
    """Histogram over N rollouts from skill=count keywords."""
    return SkillHistogram({a.value: rates.get(a.value, 0) for a in ACHIEVEMENTS}, N)


def all_of(skills, n):
    return {s.value: n for s in skills}


BASIC = [A.COLLECT_SAPLING, A.COLLECT_DRINK, A.WAKE_UP]
WOOD = [A.COLLECT_WOOD, A.PLACE_TABLE, A.MAKE_WOOD_PICKAXE, A.MAKE_WOOD_SWORD]
STONE = [A.COLLECT_STONE, A.MAKE_STONE_PICKAXE, A.MAKE_STONE_SWORD, A.PLACE_STONE]


def _max_tier(targets):
    return max(tier(a) for a in targets)


# ------------------------------------------------------------ schema


def test_every_rule_feedback_passes_the_schema():
    for h in (hist(), hist(**all_of(BASIC, 20)), hist(**all_of(BASIC + WOOD, 20)),
              hist(**all_of(BASIC + WOOD + STONE, 20)), hist(**all_of(ACHIEVEMENTS, 20))):
        fb = generate_feedback(h, 1)
        validate_feedback(fb.to_json())
        assert fb.next_iteration_advice.startswith(ADVICE_PREFIX) and fb.behavior_analysis


@pytest.mark.parametrize("bad", [
    {"behavior_analysis": "x"},
    {"behavior_analysis": "", "next_iteration_advice": "Focus on wood."},
    {"behavior_analysis": "x", "next_iteration_advice": "Try wood."},
    {"behavior_analysis": "x", "next_iteration_advice": "Focus on x.", "target_skills": ["fly"]},
])
def test_schema_rejections(bad):
    with pytest.raises(FeedbackSchemaError):
        validate_feedback(bad)


def test_feedback_file_round_trip(tmp_path):
    fb = generate_feedback(hist(collect_wood=12), 2)
    fb.save(tmp_path / "fb.json")
    assert Feedback.load(tmp_path / "fb.json") == fb
    d = json.loads((tmp_path / "fb.json").read_text())
    d["next_iteration_advice"] = "Do better."
    (tmp_path / "bad.json").write_text(json.dumps(d))
    with pytest.raises(FeedbackSchemaError):
        Feedback.load(tmp_path / "bad.json")


# ------------------------------------------------------------ target selection


def test_empty_histogram_targets_the_first_tool_chain():
    assert select_targets(hist()) == [A.COLLECT_WOOD]


def test_wood_mastered_moves_on_to_stone():
    assert select_targets(hist(**all_of(BASIC + WOOD, 20))) == [A.COLLECT_STONE]


def test_unstable_skills_at_the_top_tier_come_weakest_first():
    h = hist(**all_of(BASIC + WOOD + STONE, 20), collect_coal=8, place_furnace=3)
    # collect_iron is open (its pickaxe is mastered) and never achieved, so it is weakest
    assert select_targets(h) == [A.COLLECT_IRON, A.PLACE_FURNACE, A.COLLECT_COAL]


def test_at_most_three_targets_from_one_tier():
    h = hist(**all_of(BASIC + WOOD + STONE, 20))
    got = select_targets(h)
    assert len(got) == 3 and {tier(a) for a in got} == {3}


def test_everything_mastered_gives_generic_advice():
    fb = generate_feedback(hist(**all_of(ACHIEVEMENTS, 20)), 0)
    assert fb.target_skills == [] and fb.next_iteration_advice.startswith(ADVICE_PREFIX)


def test_empty_inputs():
    with pytest.raises(EmptyInputError):
        analyze([])
    with pytest.raises(EmptyInputError):
        generate_feedback(SkillHistogram({}, 0), 0)
    with pytest.raises(ValueError):
        SkillHistogram({"collect_wood": 5}, 3)


# ------------------------------------------------------------ progressivity


DOMINANCE_FIXTURES = [
    (hist(), hist(collect_wood=3)),
    (hist(collect_wood=3), hist(**all_of(WOOD, 15))),
    (hist(**all_of(WOOD, 15)), hist(**all_of(WOOD, 15), collect_stone=2)),
    (hist(**all_of(WOOD, 15), collect_stone=2), hist(**all_of(WOOD + STONE, 15))),
    (hist(**all_of(BASIC, 20), collect_wood=2), hist(**all_of(BASIC, 20), **all_of(WOOD, 20), collect_stone=1)),
]


@pytest.mark.parametrize("weak,strong", DOMINANCE_FIXTURES)
def test_progressivity_on_dominance_fixtures(weak, strong):
    tw, ts = select_targets(weak), select_targets(strong)
    assert tw and ts
    assert _max_tier(ts) >= _max_tier(tw)


_counts = st.lists(st.integers(0, N), min_size=len(ACHIEVEMENTS), max_size=len(ACHIEVEMENTS))


@given(base=_counts, extra=_counts)
def test_progressivity_property(base, extra):
    weak = SkillHistogram({a.value: c for a, c in zip(ACHIEVEMENTS, base)}, N)
    strong = SkillHistogram({a.value: min(N, c + e) for a, c, e in zip(ACHIEVEMENTS, base, extra)}, N)
    tw, ts = select_targets(weak), select_targets(strong)
    if tw and ts:
        assert _max_tier(ts) >= _max_tier(tw)
    for t in ts:
        assert strong.rate(t) < 0.5


# ------------------------------------------------------------ analysis from rollouts


def test_histogram_matches_recount_of_rollouts():
    rollouts = collect_rollouts(ScriptedExpert(alice_config(0.2)), n=6)
    h = analyze(rollouts)
    assert h.attempts == 6
    assert h.successes == histogram_recount([r.unlocked() for r in rollouts], [a.value for a in ACHIEVEMENTS])
    assert all(r.init == InitSpec() for r in rollouts)


def test_trial_logs_are_accepted_too():
    logs = [run_trial(ScriptedExpert(), s, InitSpec(), "x", 50) for s in (42, 43)]
    assert analyze(logs).attempts == 2


def test_feedback_closes_the_loop():
    """Targets boost the explorer toward skills the agent has not mastered."""
    rollouts = collect_rollouts(ScriptedExpert(ScriptedExpertConfig(epsilon=0.6)), n=10)
    fb = generate_feedback(analyze(rollouts), 1)
    assert fb.target_skills
    base = alice_config()
    cond = condition_on_feedback(base, fb, beta=5.0)
    for s in fb.target_skills:
        assert cond.weight(A(s)) / sum(cond.weights) > base.weight(A(s)) / sum(base.weights)
    assert set(skill_types(fb)) <= {"Harvest", "Status", "Wood", "Stone", "Iron", "Hunt"}


# ------------------------------------------------------------ chat composer


class Replies:
    def __init__(self, *replies):
        self.replies = list(replies)
        self.calls = 0

    def complete(self, messages):
        self.calls += 1
        r = self.replies.pop(0)
        if isinstance(r, Exception):
            raise r
        return r


GOOD = json.dumps({"behavior_analysis": "It gathers wood.", "next_iteration_advice": "Focus on stone tools."})


def test_parse_reply_from_noisy_text():
    d = parse_feedback_reply(f"Sure! Here it is:\n```json\n{GOOD}\n```")
    assert d["next_iteration_advice"] == "Focus on stone tools."
    for bad in ("no json", "{not json}", '["list"]', json.dumps({"behavior_analysis": "x"})):
        with pytest.raises(FeedbackSchemaError):
            parse_feedback_reply(bad)


def test_chat_composer_uses_reply_and_rule_targets():
    rollouts = collect_rollouts(ScriptedExpert(alice_config(0.2)), n=3)
    fb = LlmFeedbackComposer(Replies("garbage", GOOD)).compose(rollouts, 1)
    assert fb.source == "llm" and not fb.fallback
    assert fb.next_iteration_advice == "Focus on stone tools."
    assert fb.target_skills == generate_feedback(analyze(rollouts), 1).target_skills


def test_chat_composer_falls_back_after_retries():
    rollouts = collect_rollouts(ScriptedExpert(alice_config(0.2)), n=3)
    client = Replies("nope", "Try harder.", '{"behavior_analysis": "x", "next_iteration_advice": "Go"}')
    fb = LlmFeedbackComposer(client, retries=2).compose(rollouts, 1)
    assert fb.fallback and fb.source == "rule" and client.calls == 3
    down = LlmFeedbackComposer(Replies(RuntimeError("down"), GOOD)).compose(rollouts, 1)
    assert down.fallback
