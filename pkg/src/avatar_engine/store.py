"""Append-only session persistence: one JSONL event file per session.

Events: session_created, turn_added, turn_regenerated, feedback_added,
session_closed. Replaying a file reconstructs the SessionRecord exactly.
Improved profiles are persisted alongside as ``{session_id}.improved``
JSON documents.
"""

from __future__ import annotations

import json
import threading
from pathlib import Path

from .composer import profile_from_dict
from .errors import IncompleteRecordError, UnknownIdError
from .session import FeedbackEntry, SessionRecord, TokenBudget, Turn

EVENTS_SUFFIX = ".events"
IMPROVED_SUFFIX = ".improved"


class SessionStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()

    def events_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}{EVENTS_SUFFIX}"

    def improved_path(self, session_id: str) -> Path:
        return self.root / f"{session_id}{IMPROVED_SUFFIX}"

    def append(self, session_id: str, event: dict) -> None:
        line = json.dumps(event, ensure_ascii=False)
        # Open-append-close per event: nothing is ever buffered, so a
        # shutdown at any point leaves a valid prefix of the log.
        with open(self.events_path(session_id), "a", encoding="utf-8") as handle:
            handle.write(line + "\n")

    def read_events(self, session_id: str) -> list[dict]:
        path = self.events_path(session_id)
        if not path.exists():
            raise UnknownIdError(f"no event file for session '{session_id}'")
        events = []
        with open(path, encoding="utf-8") as handle:
            for line in handle:
                line = line.strip()
                if line:
                    events.append(json.loads(line))
        return events

    def list_sessions(self) -> list[str]:
        return sorted(p.name[: -len(EVENTS_SUFFIX)] for p in self.root.glob(f"*{EVENTS_SUFFIX}"))

    def replay(self, session_id: str) -> SessionRecord:
        """Rebuild the closed-session record by folding the event log."""
        events = self.read_events(session_id)
        if not events or events[0]["event"] != "session_created":
            raise IncompleteRecordError(f"event file for '{session_id}' does not start with session_created")

        created = events[0]
        turns: list[Turn] = []
        feedback: list[FeedbackEntry] = []
        closed_at: str | None = None

        for event in events[1:]:
            kind = event["event"]
            if kind == "turn_added":
                turns.append(
                    Turn(
                        index=event["index"],
                        role=event["role"],
                        content=event["content"],
                        token_estimate=event["token_estimate"],
                        created_at=event["at"],
                    )
                )
            elif kind == "turn_regenerated":
                turn = turns[event["index"]]
                turn.regeneration_history.append(event["superseded"])
                turn.content = event["content"]
                turn.token_estimate = event["token_estimate"]
            elif kind == "feedback_added":
                feedback.append(
                    FeedbackEntry(
                        turn_index=event["turn_index"],
                        rating=event["rating"],
                        comment=event["comment"],
                        created_at=event["at"],
                    )
                )
            elif kind == "session_closed":
                closed_at = event["at"]
            else:
                raise IncompleteRecordError(f"unknown event kind '{kind}'")

        if closed_at is None:
            raise IncompleteRecordError(f"session '{session_id}' was never closed")

        return SessionRecord(
            session_id=created["session_id"],
            profile=profile_from_dict(created["profile"]),
            budget=TokenBudget(
                window_limit=created["budget"]["window_limit"],
                reply_reserve=created["budget"]["reply_reserve"],
            ),
            profile_role=created["profile_role"],
            exemplars=tuple((u, a) for u, a in created["exemplars"]),
            improvement_source=created["improvement_source"],
            turns=tuple(turns),
            feedback=tuple(feedback),
            created_at=created["at"],
            closed_at=closed_at,
        )

    # -- improved profiles ---------------------------------------------------

    def write_improved(self, session_id: str, doc: dict) -> Path:
        path = self.improved_path(session_id)
        path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
        return path

    def read_improved(self, session_id: str) -> dict:
        path = self.improved_path(session_id)
        if not path.exists():
            raise UnknownIdError(f"no improved profile for session '{session_id}'")
        return json.loads(path.read_text(encoding="utf-8"))

    def has_improved(self, session_id: str) -> bool:
        return self.improved_path(session_id).exists()
