"""Dialogue sessions: the chat loop state machine under a token budget.

A session moves Created -> Active -> Closed. Turn 0 is always the prompt
profile; turn 1 is the avatar's self-introduction; user and assistant turns
strictly alternate afterwards. The context sent to the backend always starts
with the profile and never exceeds window_limit - reply_reserve tokens;
overflowing histories evict whole user/assistant exchanges oldest-first.
"""

from __future__ import annotations

import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Callable, Sequence

from .backend import ChatMessage, CompletionBackend
from .composer import PromptProfile, profile_to_dict
from .errors import (
    BudgetTooSmallError,
    EmptyMessageError,
    InvalidTurnError,
    MessageTooLargeError,
    NothingToRegenerateError,
    SessionClosedError,
    UnknownIdError,
)

ROLE_PROFILE = "profile"
ROLE_USER = "user"
ROLE_ASSISTANT = "assistant"

STATE_CREATED = "Created"
STATE_ACTIVE = "Active"
STATE_CLOSED = "Closed"


def estimate_tokens(text: str) -> int:
    """Default estimator: ceil(len/4). Deterministic, monotone, estimate('')=0."""
    return (len(text) + 3) // 4


TokenEstimator = Callable[[str], int]
Clock = Callable[[], datetime]


def _utc_now() -> datetime:
    return datetime.now(timezone.utc)


@dataclass(frozen=True)
class TokenBudget:
    window_limit: int
    reply_reserve: int

    def __post_init__(self):
        if not (self.window_limit > self.reply_reserve > 0):
            raise ValueError("require window_limit > reply_reserve > 0")

    @property
    def context_limit(self) -> int:
        return self.window_limit - self.reply_reserve


@dataclass
class Turn:
    index: int
    role: str
    content: str
    token_estimate: int
    created_at: str
    regeneration_history: list[str] = field(default_factory=list)


@dataclass
class FeedbackEntry:
    turn_index: int
    rating: str  # positive | negative
    comment: str | None
    created_at: str


@dataclass(frozen=True)
class SessionRecord:
    """Immutable snapshot of a closed session; reloadable from its event file."""

    session_id: str
    profile: PromptProfile
    budget: TokenBudget
    profile_role: str
    exemplars: tuple[tuple[str, str], ...]
    improvement_source: str | None
    turns: tuple[Turn, ...]
    feedback: tuple[FeedbackEntry, ...]
    created_at: str
    closed_at: str


@dataclass
class DialogueSession:
    session_id: str
    profile: PromptProfile
    prompt_text: str
    budget: TokenBudget
    backend: CompletionBackend
    profile_role: str = "system"
    exemplars: tuple[tuple[str, str], ...] = ()
    improvement_source: str | None = None
    state: str = STATE_CREATED
    turns: list[Turn] = field(default_factory=list)
    feedback: list[FeedbackEntry] = field(default_factory=list)
    created_at: str = ""
    closed_at: str | None = None
    record: SessionRecord | None = None


class SessionEngine:
    """Runs dialogue sessions; one writer per session, many sessions in parallel.

    ``store`` may be any object with an ``append(session_id, event)`` method
    (see store.SessionStore); None keeps sessions in memory only.
    """

    def __init__(
        self,
        store=None,
        *,
        clock: Clock = _utc_now,
        estimator: TokenEstimator = estimate_tokens,
        id_factory: Callable[[], str] | None = None,
    ):
        self.store = store
        self.clock = clock
        self.estimator = estimator
        self.id_factory = id_factory or (lambda: uuid.uuid4().hex)
        self._sessions: dict[str, DialogueSession] = {}
        self._locks: dict[str, threading.RLock] = {}
        self._registry_lock = threading.Lock()

    # -- registry ----------------------------------------------------------

    def get_session(self, session_id: str) -> DialogueSession:
        session = self._sessions.get(session_id)
        if session is None:
            raise UnknownIdError(f"unknown session '{session_id}'")
        return session

    def session_ids(self) -> list[str]:
        return list(self._sessions)

    def lock_for(self, session_id: str) -> threading.RLock:
        with self._registry_lock:
            lock = self._locks.get(session_id)
            if lock is None:
                lock = threading.RLock()
                self._locks[session_id] = lock
            return lock

    def _now(self) -> str:
        return self.clock().isoformat()

    def _emit(self, session: DialogueSession, event: dict) -> None:
        if self.store is not None:
            self.store.append(session.session_id, event)

    # -- lifecycle ---------------------------------------------------------

    def start_session(
        self,
        profile: PromptProfile,
        budget: TokenBudget,
        backend: CompletionBackend,
        *,
        improvement=None,
        profile_role: str = "system",
        exemplars: Sequence[tuple[str, str]] = (),
    ) -> DialogueSession:
        """Create and activate a session: profile turn plus self-introduction.

        ``improvement`` (an improvement.ImprovedProfile) replaces the turn-0
        text with the improved prompt and records its source session. On a
        backend failure the session stays Created with no turns.
        """
        if profile_role not in ("system", "user"):
            raise ValueError("profile_role must be 'system' or 'user'")
        prompt_text = profile.rendered_text
        improvement_source = None
        if improvement is not None:
            profile = improvement.base
            prompt_text = improvement.rendered_text
            improvement_source = improvement.source_session_id

        exemplars = tuple((u, a) for u, a in exemplars)
        pinned = self.estimator(prompt_text) + sum(
            self.estimator(u) + self.estimator(a) for u, a in exemplars
        )
        if pinned + budget.reply_reserve > budget.window_limit:
            raise BudgetTooSmallError(
                f"window_limit {budget.window_limit} cannot hold the profile "
                f"({pinned} tokens) plus reply_reserve {budget.reply_reserve}"
            )

        session = DialogueSession(
            session_id=self.id_factory(),
            profile=profile,
            prompt_text=prompt_text,
            budget=budget,
            backend=backend,
            profile_role=profile_role,
            exemplars=exemplars,
            improvement_source=improvement_source,
            created_at=self._now(),
        )
        with self._registry_lock:
            self._sessions[session.session_id] = session

        with self.lock_for(session.session_id):
            self._emit(
                session,
                {
                    "event": "session_created",
                    "at": session.created_at,
                    "session_id": session.session_id,
                    "profile": profile_to_dict(session.profile),
                    "budget": {
                        "window_limit": budget.window_limit,
                        "reply_reserve": budget.reply_reserve,
                    },
                    "profile_role": profile_role,
                    "exemplars": [list(pair) for pair in exemplars],
                    "improvement_source": improvement_source,
                },
            )
            # One completion over just the pinned context yields the
            # self-introduction; failure leaves the session Created.
            intro = session.backend.complete(self._pinned_messages(session))
            self._append_turn(session, ROLE_PROFILE, session.prompt_text)
            self._append_turn(session, ROLE_ASSISTANT, intro.content)
            session.state = STATE_ACTIVE
        return session

    def send_message(self, session: DialogueSession, user_text: str) -> Turn:
        with self.lock_for(session.session_id):
            self._require_active(session)
            if not user_text or not user_text.strip():
                raise EmptyMessageError("user message must be non-empty")
            pinned = self._pinned_tokens(session)
            if pinned + self.estimator(user_text) > session.budget.context_limit:
                raise MessageTooLargeError(
                    "message plus profile exceeds window_limit - reply_reserve"
                )
            self._append_turn(session, ROLE_USER, user_text)
            context = self._build_context(session, session.turns)
            # Backend failure keeps the user turn; the call is retryable via
            # a follow-up send or regenerate-style retry at the caller.
            result = session.backend.complete(context)
            return self._append_turn(session, ROLE_ASSISTANT, result.content)

    def regenerate(self, session: DialogueSession) -> Turn:
        with self.lock_for(session.session_id):
            self._require_active(session)
            last = session.turns[-1] if session.turns else None
            if last is None or last.role != ROLE_ASSISTANT:
                raise NothingToRegenerateError("last turn is not an assistant reply")
            context = self._build_context(session, session.turns[:-1])
            result = session.backend.complete(context)
            # Only now that the backend succeeded does the history change.
            last.regeneration_history.append(last.content)
            last.content = result.content
            last.token_estimate = self.estimator(result.content)
            self._emit(
                session,
                {
                    "event": "turn_regenerated",
                    "at": self._now(),
                    "index": last.index,
                    "superseded": last.regeneration_history[-1],
                    "content": last.content,
                    "token_estimate": last.token_estimate,
                },
            )
            return last

    def record_feedback(
        self,
        session: DialogueSession,
        turn_index: int,
        rating: str,
        comment: str | None = None,
    ) -> FeedbackEntry:
        with self.lock_for(session.session_id):
            self._require_active(session)
            if rating not in ("positive", "negative"):
                raise InvalidTurnError(f"invalid rating '{rating}'")
            if not 0 <= turn_index < len(session.turns):
                raise InvalidTurnError(f"turn index {turn_index} out of range")
            if session.turns[turn_index].role != ROLE_ASSISTANT:
                raise InvalidTurnError(f"turn {turn_index} is not an assistant turn")
            entry = FeedbackEntry(
                turn_index=turn_index,
                rating=rating,
                comment=comment,
                created_at=self._now(),
            )
            session.feedback.append(entry)
            self._emit(
                session,
                {
                    "event": "feedback_added",
                    "at": entry.created_at,
                    "turn_index": turn_index,
                    "rating": rating,
                    "comment": comment,
                },
            )
            return entry

    def close_session(self, session: DialogueSession) -> SessionRecord:
        with self.lock_for(session.session_id):
            if session.state == STATE_CLOSED:
                raise SessionClosedError(
                    f"session '{session.session_id}' already closed",
                    record=session.record,
                )
            self._require_active(session)
            session.state = STATE_CLOSED
            session.closed_at = self._now()
            session.record = SessionRecord(
                session_id=session.session_id,
                profile=session.profile,
                budget=session.budget,
                profile_role=session.profile_role,
                exemplars=session.exemplars,
                improvement_source=session.improvement_source,
                turns=tuple(
                    Turn(
                        index=t.index,
                        role=t.role,
                        content=t.content,
                        token_estimate=t.token_estimate,
                        created_at=t.created_at,
                        regeneration_history=list(t.regeneration_history),
                    )
                    for t in session.turns
                ),
                feedback=tuple(
                    FeedbackEntry(
                        turn_index=f.turn_index,
                        rating=f.rating,
                        comment=f.comment,
                        created_at=f.created_at,
                    )
                    for f in session.feedback
                ),
                created_at=session.created_at,
                closed_at=session.closed_at,
            )
            self._emit(session, {"event": "session_closed", "at": session.closed_at})
            return session.record

    # -- context building --------------------------------------------------

    def build_context(self, session: DialogueSession) -> list[ChatMessage]:
        with self.lock_for(session.session_id):
            self._require_active(session)
            return self._build_context(session, session.turns)

    def _require_active(self, session: DialogueSession) -> None:
        if session.state == STATE_CLOSED:
            raise SessionClosedError(f"session '{session.session_id}' is closed")
        if session.state != STATE_ACTIVE:
            raise SessionClosedError(f"session '{session.session_id}' is not active")

    def _pinned_messages(self, session: DialogueSession) -> list[ChatMessage]:
        role = "system" if session.profile_role == "system" else "user"
        messages = [ChatMessage(role=role, content=session.prompt_text)]
        for user_text, assistant_text in session.exemplars:
            messages.append(ChatMessage(role="user", content=user_text))
            messages.append(ChatMessage(role="assistant", content=assistant_text))
        return messages

    def _pinned_tokens(self, session: DialogueSession) -> int:
        return sum(self.estimator(m.content) for m in self._pinned_messages(session))

    def _build_context(self, session: DialogueSession, turns: Sequence[Turn]) -> list[ChatMessage]:
        """Greedy oldest-first eviction of whole exchanges until the budget fits.

        Units are: the solo self-introduction, then each user/assistant pair.
        The profile (and exemplars) are pinned, as is the unit holding the
        most recent user message.
        """
        pinned = self._pinned_messages(session)
        budget = session.budget.context_limit

        units: list[list[Turn]] = []
        for turn in turns:
            if turn.role == ROLE_PROFILE:
                continue
            if turn.role == ROLE_USER or not units:
                units.append([turn])
            else:
                units[-1].append(turn)

        last_user_unit = None
        for unit in reversed(units):
            if any(t.role == ROLE_USER for t in unit):
                last_user_unit = unit
                break

        def total(selected: list[list[Turn]]) -> int:
            live = sum(self.estimator(m.content) for m in pinned)
            live += sum(t.token_estimate for unit in selected for t in unit)
            return live

        surviving = list(units)
        while total(surviving) > budget:
            evictable = next((u for u in surviving if u is not last_user_unit), None)
            if evictable is None:
                raise MessageTooLargeError(
                    "profile plus the most recent exchange exceeds the context budget"
                )
            surviving.remove(evictable)

        messages = list(pinned)
        for unit in surviving:
            for turn in unit:
                messages.append(ChatMessage(role=turn.role, content=turn.content))
        return messages

    # -- internals ----------------------------------------------------------

    def _append_turn(self, session: DialogueSession, role: str, content: str) -> Turn:
        turn = Turn(
            index=len(session.turns),
            role=role,
            content=content,
            token_estimate=self.estimator(content),
            created_at=self._now(),
        )
        session.turns.append(turn)
        self._emit(
            session,
            {
                "event": "turn_added",
                "at": turn.created_at,
                "index": turn.index,
                "role": turn.role,
                "content": turn.content,
                "token_estimate": turn.token_estimate,
            },
        )
        return turn
