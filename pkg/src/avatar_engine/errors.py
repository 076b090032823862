"""Error taxonomy shared by all modules.

Every error carries a stable machine-readable ``code`` so the HTTP layer
and the CLI can map failures without string matching.
"""

from __future__ import annotations


class AvatarError(Exception):
    """Base class for all engine errors."""

    code = "AvatarError"


class ParseError(AvatarError):
    """Document could not be parsed at all (malformed syntax)."""

    code = "ParseError"

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(AvatarError):
    """Document parsed but violates the schema (missing field, duplicate id, ...)."""

    code = "SchemaError"


class UnknownIdError(AvatarError):
    code = "UnknownId"


class InvalidSelectionError(AvatarError):
    code = "InvalidSelection"


class BudgetTooSmallError(AvatarError):
    code = "BudgetTooSmall"


class SessionClosedError(AvatarError):
    """Operation on a closed session.

    When raised by a repeated close, ``record`` carries the unchanged
    session record so callers can still obtain it.
    """

    code = "SessionClosed"

    def __init__(self, message: str, record=None):
        super().__init__(message)
        self.record = record


class EmptyMessageError(AvatarError):
    code = "EmptyMessage"


class NothingToRegenerateError(AvatarError):
    code = "NothingToRegenerate"


class InvalidTurnError(AvatarError):
    code = "InvalidTurn"


class MessageTooLargeError(AvatarError):
    code = "MessageTooLarge"


class EmptySessionError(AvatarError):
    code = "EmptySession"


class InvalidCaseError(AvatarError):
    code = "InvalidCase"


class IncompleteRecordError(AvatarError):
    """Event file does not end in a closed session."""

    code = "IncompleteRecord"


class BackendError(AvatarError):
    """Base class for completion-backend failures."""

    code = "BackendError"


class AuthError(BackendError):
    code = "AuthError"


class RateLimitedError(BackendError):
    code = "RateLimited"

    def __init__(self, message: str, retry_after: float | None = None):
        super().__init__(message)
        self.retry_after = retry_after


class BackendTimeoutError(BackendError):
    code = "Timeout"


class ContextOverflowError(BackendError):
    code = "ContextOverflow"


class MalformedResponseError(BackendError):
    code = "MalformedResponse"


class ScriptExhaustedError(BackendError):
    code = "ScriptExhausted"
