"""Between-session prompt improvement: digest a closed dialogue, consolidate
it into a compact memory, and append that memory to the base profile.

The default path is rule-based and extractive: every digest item is a
contiguous substring of some turn in the source record, so nothing the
memory asserts was ever invented. An optional backend-driven consolidation
exists behind an explicit call; its output is still capped by the same
compression ceiling.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .backend import ChatMessage, CompletionBackend
from .composer import PromptProfile
from .errors import BudgetTooSmallError, EmptySessionError
from .session import (
    ROLE_ASSISTANT,
    ROLE_PROFILE,
    ROLE_USER,
    SessionRecord,
    TokenBudget,
    estimate_tokens,
)

MEMORY_PREAMBLE = "You also remember the following from our previous conversation:"
HEADING_HISTORY = "Known history:"
HEADING_CONCLUSIONS = "Prior working conclusions:"
HEADING_PREFERENCES = "Patient preferences:"

DEFAULT_COMPRESSION_RATIO = 0.5

_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")

_SYMPTOM_MARKERS = re.compile(r"\b(have|feel|experience|experiencing|presents? with)\b", re.IGNORECASE)
_CONCLUSION_MARKERS = re.compile(r"\b(diagnosis|diagnoses|recommend|suggest)\b", re.IGNORECASE)
_PREFERENCE_MARKERS = re.compile(r"\b(prefer|would rather|i'd like|i would like)\b", re.IGNORECASE)

_CONSOLIDATION_PROMPT = (
    "Condense the following notes from a patient dialogue into a short memory "
    "for the next session. Keep only facts the patient stated, prior working "
    "conclusions, and the patient's preferences. Reply with the memory text only.\n\n"
)


@dataclass(frozen=True)
class DialogueDigest:
    """Extracted sentences from one closed session, grouped by kind.

    ``negative_feedback_topics`` is kept for audit only and never enters
    the memory text. ``dialogue_token_estimate`` is the token total of the
    source dialogue excluding the profile turn; it anchors the compression
    ceiling.
    """

    stated_symptoms: tuple[str, ...]
    working_conclusions: tuple[str, ...]
    preferences: tuple[str, ...]
    negative_feedback_topics: tuple[str, ...]
    source_session_id: str
    dialogue_token_estimate: int

    @property
    def memory_items(self) -> int:
        return len(self.stated_symptoms) + len(self.working_conclusions) + len(self.preferences)


@dataclass(frozen=True)
class ImprovedProfile:
    base: PromptProfile
    memory_text: str
    token_delta: int
    source_session_id: str
    truncated: bool = False

    @property
    def rendered_text(self) -> str:
        if not self.memory_text:
            return self.base.rendered_text
        return f"{self.base.rendered_text} {MEMORY_PREAMBLE} {self.memory_text}"


def split_sentences(text: str) -> list[str]:
    """Sentence fragments that are verbatim substrings of ``text``."""
    parts = [p.strip() for p in _SENTENCE_SPLIT.split(text)]
    return [p for p in parts if p]


def _strip_terminal(sentence: str) -> str:
    # Dropping the terminal punctuation keeps the fragment a contiguous
    # substring of its source turn.
    return sentence.rstrip(".!?").rstrip()


def collect(record: SessionRecord) -> DialogueDigest:
    """Extract symptoms, conclusions, and preferences from a closed record."""
    if not any(t.role == ROLE_USER for t in record.turns):
        raise EmptySessionError(f"session '{record.session_id}' has no user turns")

    negative_turns = {f.turn_index for f in record.feedback if f.rating == "negative"}

    symptoms: list[str] = []
    conclusions: list[str] = []
    preferences: list[str] = []
    negatives: list[str] = []

    def add(bucket: list[str], item: str) -> None:
        if item and item not in bucket:
            bucket.append(item)

    for turn in record.turns:
        if turn.role == ROLE_PROFILE:
            continue
        sentences = split_sentences(turn.content)
        if turn.role == ROLE_USER:
            for sentence in sentences:
                item = _strip_terminal(sentence)
                if _SYMPTOM_MARKERS.search(sentence):
                    add(symptoms, item)
                if _PREFERENCE_MARKERS.search(sentence):
                    add(preferences, item)
        elif turn.role == ROLE_ASSISTANT:
            for sentence in sentences:
                if _CONCLUSION_MARKERS.search(sentence):
                    add(conclusions, _strip_terminal(sentence))
            if turn.index in negative_turns:
                for sentence in sentences:
                    add(negatives, _strip_terminal(sentence))

    dialogue_tokens = sum(t.token_estimate for t in record.turns if t.role != ROLE_PROFILE)
    return DialogueDigest(
        stated_symptoms=tuple(symptoms),
        working_conclusions=tuple(conclusions),
        preferences=tuple(preferences),
        negative_feedback_topics=tuple(negatives),
        source_session_id=record.session_id,
        dialogue_token_estimate=dialogue_tokens,
    )


def render_memory(symptoms, conclusions, preferences) -> str:
    sections = []
    if symptoms:
        sections.append(f"{HEADING_HISTORY} {'; '.join(symptoms)}.")
    if conclusions:
        sections.append(f"{HEADING_CONCLUSIONS} {'; '.join(conclusions)}.")
    if preferences:
        sections.append(f"{HEADING_PREFERENCES} {'; '.join(preferences)}.")
    return " ".join(sections)


def consolidate(
    digest: DialogueDigest,
    base_profile: PromptProfile,
    budget: TokenBudget,
    *,
    compression_ratio: float = DEFAULT_COMPRESSION_RATIO,
    estimator=estimate_tokens,
) -> ImprovedProfile:
    """Build the improved profile under the compression ceiling.

    When the memory overflows, items are dropped deterministically: oldest
    working conclusions first, then oldest stated symptoms, then oldest
    preferences. An empty digest yields memory_text '' and an improved
    prompt equal to the base profile.
    """
    symptoms = list(digest.stated_symptoms)
    conclusions = list(digest.working_conclusions)
    preferences = list(digest.preferences)
    had_items = bool(symptoms or conclusions or preferences)

    def drop_oldest() -> bool:
        for bucket in (conclusions, symptoms, preferences):
            if bucket:
                bucket.pop(0)
                return True
        return False

    ceiling = compression_ratio * digest.dialogue_token_estimate
    truncated = False
    while (symptoms or conclusions or preferences) and estimator(
        render_memory(symptoms, conclusions, preferences)
    ) > ceiling:
        drop_oldest()
        truncated = True

    def improved_text() -> str:
        memory = render_memory(symptoms, conclusions, preferences)
        if not memory:
            return base_profile.rendered_text
        return f"{base_profile.rendered_text} {MEMORY_PREAMBLE} {memory}"

    window_forced = False
    while (symptoms or conclusions or preferences) and (
        estimator(improved_text()) + budget.reply_reserve > budget.window_limit
    ):
        drop_oldest()
        truncated = True
        window_forced = True

    if estimator(improved_text()) + budget.reply_reserve > budget.window_limit:
        raise BudgetTooSmallError(
            "improved profile cannot fit the session window even without memory"
        )
    if window_forced and had_items and not (symptoms or conclusions or preferences):
        raise BudgetTooSmallError(
            "window_limit cannot hold the profile plus even one memory item"
        )

    memory_text = render_memory(symptoms, conclusions, preferences)
    return ImprovedProfile(
        base=base_profile,
        memory_text=memory_text,
        token_delta=estimator(memory_text),
        source_session_id=digest.source_session_id,
        truncated=truncated,
    )


def llm_consolidate(
    digest: DialogueDigest,
    base_profile: PromptProfile,
    backend: CompletionBackend,
    *,
    compression_ratio: float = DEFAULT_COMPRESSION_RATIO,
    estimator=estimate_tokens,
) -> ImprovedProfile:
    """Backend-written memory; still capped by the compression ceiling.

    Non-deterministic by nature, so nothing downstream golden-tests its
    content; an over-long reply is cut to the ceiling and flagged.
    """
    prompt = _CONSOLIDATION_PROMPT + render_memory(
        digest.stated_symptoms, digest.working_conclusions, digest.preferences
    )
    result = backend.complete([ChatMessage(role="user", content=prompt)])
    memory_text = result.content.strip()

    ceiling = int(compression_ratio * digest.dialogue_token_estimate)
    truncated = False
    if estimator(memory_text) > ceiling:
        memory_text = memory_text[: max(0, ceiling * 4)].rstrip()
        truncated = True

    return ImprovedProfile(
        base=base_profile,
        memory_text=memory_text,
        token_delta=estimator(memory_text),
        source_session_id=digest.source_session_id,
        truncated=truncated,
    )


def improved_to_dict(improved: ImprovedProfile) -> dict:
    from .composer import profile_to_dict

    return {
        "source_session_id": improved.source_session_id,
        "memory_text": improved.memory_text,
        "token_delta": improved.token_delta,
        "truncated": improved.truncated,
        "rendered_text": improved.rendered_text,
        "base_profile": profile_to_dict(improved.base),
    }


def improved_from_dict(raw: dict) -> ImprovedProfile:
    from .composer import profile_from_dict

    return ImprovedProfile(
        base=profile_from_dict(raw["base_profile"]),
        memory_text=raw["memory_text"],
        token_delta=raw["token_delta"],
        source_session_id=raw["source_session_id"],
        truncated=raw["truncated"],
    )
