from __future__ import annotations

import random

import pytest

from avatar_engine.backend import ScriptedBackend
from avatar_engine.composer import TraitSelection, compose
from avatar_engine.errors import BudgetTooSmallError, EmptySessionError
from avatar_engine.improvement import (
    HEADING_CONCLUSIONS,
    HEADING_HISTORY,
    MEMORY_PREAMBLE,
    collect,
    consolidate,
    llm_consolidate,
    improved_from_dict,
    improved_to_dict,
    render_memory,
    split_sentences,
)
from avatar_engine.session import SessionEngine, TokenBudget, estimate_tokens

from conftest import fixed_clock, make_id_factory


def _engine():
    return SessionEngine(clock=fixed_clock, id_factory=make_id_factory())


def _closed_session(engine, profile, script, user_messages, budget=None, feedback=()):
    session = engine.start_session(
        profile, budget or TokenBudget(window_limit=4096, reply_reserve=256), ScriptedBackend(script)
    )
    for message in user_messages:
        engine.send_message(session, message)
    for turn_index, rating in feedback:
        engine.record_feedback(session, turn_index, rating, None)
    return engine.close_session(session)


# -- collect -------------------------------------------------------------------


def test_collect_extracts_case_symptoms(gp_ethical_profile, figure2):
    engine = _engine()
    record = _closed_session(
        engine,
        gp_ethical_profile,
        ["intro", figure2["specialized"]],
        [figure2["case"].case_text],
    )
    digest = collect(record)
    assert any(
        "pain in the left lower extremity during physical activity" in item
        for item in digest.stated_symptoms
    )


def test_collect_requires_user_turns(gp_ethical_profile):
    engine = _engine()
    session = engine.start_session(
        gp_ethical_profile,
        TokenBudget(window_limit=4096, reply_reserve=256),
        ScriptedBackend(["intro"]),
    )
    record = engine.close_session(session)
    with pytest.raises(EmptySessionError):
        collect(record)


def test_collect_conclusion_sentences(gp_ethical_profile):
    engine = _engine()
    record = _closed_session(
        engine,
        gp_ethical_profile,
        ["intro", "Given your history, the possible diagnosis could be tendinitis. Rest is wise."],
        ["I have knee pain after long runs."],
    )
    digest = collect(record)
    assert "Given your history, the possible diagnosis could be tendinitis" in digest.working_conclusions
    assert "Rest is wise" not in digest.working_conclusions


def test_collect_is_extractive(gp_ethical_profile):
    engine = _engine()
    record = _closed_session(
        engine,
        gp_ethical_profile,
        ["intro", "I recommend ice and rest. Your diagnosis is a mild strain."],
        ["I feel a sharp pain in my calf. I would like to avoid surgery."],
    )
    digest = collect(record)
    all_content = "\n".join(t.content for t in record.turns)
    for bucket in (
        digest.stated_symptoms,
        digest.working_conclusions,
        digest.preferences,
        digest.negative_feedback_topics,
    ):
        for item in bucket:
            assert item in all_content


def test_collect_preferences_and_negative_feedback(gp_ethical_profile):
    engine = _engine()
    record = _closed_session(
        engine,
        gp_ethical_profile,
        ["intro", "You should try swimming. I suggest a follow-up next month."],
        ["I would rather not take painkillers."],
        feedback=[(3, "negative")],
    )
    digest = collect(record)
    assert "I would rather not take painkillers" in digest.preferences
    assert any("swimming" in t for t in digest.negative_feedback_topics)


def test_collect_is_deterministic(gp_ethical_profile, figure2):
    records = []
    for _ in range(2):
        engine = _engine()
        records.append(
            _closed_session(
                engine,
                gp_ethical_profile,
                ["intro", figure2["specialized"]],
                [figure2["case"].case_text],
            )
        )
    assert collect(records[0]) == collect(records[1])


def test_split_sentences_are_substrings():
    text = "First thing. Second thing! Third thing? And a trailing bit"
    for sentence in split_sentences(text):
        assert sentence in text


# -- consolidate -----------------------------------------------------------------


def test_consolidate_empty_digest_is_identity(gp_ethical_profile):
    engine = _engine()
    record = _closed_session(engine, gp_ethical_profile, ["intro", "Noted."], ["Hello doctor"])
    digest = collect(record)
    assert digest.memory_items == 0
    improved = consolidate(digest, gp_ethical_profile, record.budget)
    assert improved.memory_text == ""
    assert improved.token_delta == 0
    assert improved.rendered_text == gp_ethical_profile.rendered_text


def test_consolidate_two_exchange_compression(gp_ethical_profile, figure2):
    engine = _engine()
    record = _closed_session(
        engine,
        gp_ethical_profile,
        [
            figure2["introduction"],
            "I suggest resting the leg and icing it twice a day to reduce the swelling.",
            "The diagnosis is likely a soft tissue strain; I recommend a follow-up in two weeks.",
        ],
        [
            "I have a dull ache in my left thigh after my morning runs around the park.",
            "I also feel some stiffness in the same leg every evening before bed.",
        ],
    )
    digest = collect(record)
    improved = consolidate(digest, gp_ethical_profile, record.budget)
    dialogue_tokens = digest.dialogue_token_estimate
    assert improved.token_delta <= 0.5 * dialogue_tokens
    assert improved.memory_text.startswith(HEADING_HISTORY)
    assert HEADING_CONCLUSIONS in improved.memory_text
    assert improved.rendered_text == (
        f"{gp_ethical_profile.rendered_text} {MEMORY_PREAMBLE} {improved.memory_text}"
    )


def test_consolidate_truncates_oldest_conclusions_first(gp_ethical_profile):
    engine = _engine()
    replies = [
        "intro",
        "I recommend plan alpha for the first issue you raised today in detail.",
        "I recommend plan beta as the second option to consider going forward.",
        "I recommend plan gamma which is the most recent suggestion of all three.",
    ]
    users = [
        "I have issue one to report today.",
        "I have issue two to report today.",
        "I have issue three to report today.",
    ]
    record = _closed_session(engine, gp_ethical_profile, replies, users)
    digest = collect(record)
    assert len(digest.working_conclusions) == 3

    # Squeeze the ceiling: keep the ratio small enough to force drops.
    improved = consolidate(digest, gp_ethical_profile, record.budget, compression_ratio=0.25)
    kept = improved.memory_text
    assert improved.truncated
    # Oldest conclusions go first: gamma (newest) outlives beta, beta outlives alpha.
    if "plan beta" in kept:
        assert "plan gamma" in kept
    if "plan alpha" in kept:
        assert "plan beta" in kept and "plan gamma" in kept
    assert improved.token_delta <= 0.25 * digest.dialogue_token_estimate


def test_consolidate_truncation_matches_greedy_oracle(gp_ethical_profile):
    engine = _engine()
    rng = random.Random(11)
    replies = ["intro"] + [
        f"I recommend option {i} because " + "r" * rng.randrange(10, 60) + "."
        for i in range(6)
    ]
    users = [f"I have symptom {i}: " + "s" * rng.randrange(10, 60) + "." for i in range(6)]
    record = _closed_session(engine, gp_ethical_profile, replies, users)
    digest = collect(record)
    ratio = 0.2
    improved = consolidate(digest, gp_ethical_profile, record.budget, compression_ratio=ratio)

    # Oracle: re-run the documented drop order by hand.
    symptoms = list(digest.stated_symptoms)
    conclusions = list(digest.working_conclusions)
    preferences = list(digest.preferences)
    ceiling = ratio * digest.dialogue_token_estimate
    while (symptoms or conclusions or preferences) and estimate_tokens(
        render_memory(symptoms, conclusions, preferences)
    ) > ceiling:
        if conclusions:
            conclusions.pop(0)
        elif symptoms:
            symptoms.pop(0)
        else:
            preferences.pop(0)
    assert improved.memory_text == render_memory(symptoms, conclusions, preferences)


def test_consolidate_budget_too_small(gp_ethical_profile):
    # Long dialogue, so the compression ceiling is generous; the tight
    # window is what blocks every item.
    engine = _engine()
    replies = ["intro"] + [f"I recommend remedy {i}: " + "r" * 80 + "." for i in range(3)]
    users = [f"I have symptom {i}: " + "s" * 80 + "." for i in range(3)]
    record = _closed_session(engine, gp_ethical_profile, replies, users)
    digest = collect(record)
    assert digest.memory_items > 0
    profile_tokens = estimate_tokens(gp_ethical_profile.rendered_text)
    tight = TokenBudget(window_limit=profile_tokens + 25, reply_reserve=20)
    with pytest.raises(BudgetTooSmallError):
        consolidate(digest, gp_ethical_profile, tight)


def test_improvement_seeds_next_session(gp_ethical_profile, figure2):
    engine = _engine()
    record = _closed_session(
        engine,
        gp_ethical_profile,
        [figure2["introduction"], "I recommend stretching daily."],
        ["I have tight hamstrings."],
    )
    digest = collect(record)
    improved = consolidate(digest, gp_ethical_profile, record.budget)
    assert improved.memory_text

    next_session = engine.start_session(
        improved.base,
        record.budget,
        ScriptedBackend(["welcome back"]),
        improvement=improved,
    )
    assert next_session.turns[0].content == improved.rendered_text
    assert next_session.turns[0].content.startswith("In this dialogue session with me, ")
    assert MEMORY_PREAMBLE in next_session.turns[0].content
    assert next_session.improvement_source == record.session_id


def test_improved_document_round_trip(gp_ethical_profile):
    engine = _engine()
    record = _closed_session(
        engine,
        gp_ethical_profile,
        ["intro", "I suggest hydration."],
        ["I feel dizzy in the mornings."],
    )
    improved = consolidate(collect(record), gp_ethical_profile, record.budget)
    assert improved_from_dict(improved_to_dict(improved)) == improved


# -- llm consolidation -------------------------------------------------------------


def test_llm_consolidate_uses_backend_reply(gp_ethical_profile, figure2):
    engine = _engine()
    record = _closed_session(
        engine,
        gp_ethical_profile,
        [figure2["introduction"], "I recommend new shoes."],
        ["I have heel pain when I run marathons."],
    )
    digest = collect(record)
    backend = ScriptedBackend(["Patient is a marathon runner with left-leg pain."])
    improved = llm_consolidate(digest, gp_ethical_profile, backend)
    assert improved.memory_text == "Patient is a marathon runner with left-leg pain."
    assert not improved.truncated
    # The meta-prompt embeds the digest.
    assert "heel pain" in backend.calls[0][0].content


def test_llm_consolidate_truncates_overlong_reply(gp_ethical_profile):
    engine = _engine()
    record = _closed_session(
        engine,
        gp_ethical_profile,
        ["intro", "I recommend rest."],
        ["I have a sore ankle."],
    )
    digest = collect(record)
    long_reply = "memory " * 400
    improved = llm_consolidate(digest, gp_ethical_profile, ScriptedBackend([long_reply]))
    assert improved.truncated
    assert improved.token_delta <= 0.5 * digest.dialogue_token_estimate


# -- randomized properties ------------------------------------------------------------


@pytest.mark.parametrize("seed", range(15))
def test_random_sessions_satisfy_compression_and_extraction(default_dict, seed):
    rng = random.Random(seed)
    engine = _engine()
    profile = compose(
        default_dict,
        rng.choice([s.id for s in default_dict.specialties]),
        TraitSelection.of(rng.sample([c.id for c in default_dict.trait_categories], k=rng.randrange(0, 3))),
    )
    symptom_verbs = ["I have", "I feel", "I experience"]
    replies = ["intro"] + [
        rng.choice(["I recommend", "I suggest", "The diagnosis is", "Let us see;"])
        + " "
        + "w" * rng.randrange(5, 90)
        + "."
        for i in range(8)
    ]
    record_users = [
        rng.choice(symptom_verbs) + " " + "q" * rng.randrange(5, 90) + "." for _ in range(8)
    ]
    record = _closed_session(engine, profile, replies, record_users)
    digest = collect(record)

    all_content = "\n".join(t.content for t in record.turns)
    for bucket in (digest.stated_symptoms, digest.working_conclusions, digest.preferences):
        for item in bucket:
            assert item in all_content

    improved = consolidate(digest, profile, record.budget)
    assert improved.token_delta <= 0.5 * digest.dialogue_token_estimate
    assert estimate_tokens(improved.memory_text) == improved.token_delta
