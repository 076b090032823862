"""Completion backends: an OpenAI-compatible HTTP client and a scripted mock.

Wire format: POST {endpoint}/chat/completions with ``model``, ``temperature``
and ``messages``; the reply is read from ``choices[0].message.content`` and
``usage``. No call ever retries implicitly; every failure surfaces exactly
once as a typed error.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass
from typing import Protocol, Sequence
from urllib.parse import urlparse

import httpx

from .errors import (
    AuthError,
    BackendTimeoutError,
    ContextOverflowError,
    MalformedResponseError,
    RateLimitedError,
    ScriptExhaustedError,
)

_ROLES = ("system", "user", "assistant")


@dataclass(frozen=True)
class ChatMessage:
    role: str
    content: str

    def __post_init__(self):
        if self.role not in _ROLES:
            raise ValueError(f"invalid role '{self.role}'")
        if self.role in ("system", "user") and not self.content:
            raise ValueError(f"{self.role} message content must be non-empty")


@dataclass(frozen=True)
class CompletionResult:
    content: str
    finish_reason: str = "stop"  # stop | length | other
    prompt_token_count: int | None = None
    completion_token_count: int | None = None


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str = "https://api.openai.com/v1"
    model: str = "gpt-3.5-turbo"
    temperature: float = 1.0
    timeout: float = 30.0
    auth_env: str = "AVATAR_API_KEY"

    def __post_init__(self):
        parsed = urlparse(self.endpoint)
        if parsed.scheme not in ("http", "https") or not parsed.netloc:
            raise ValueError(f"invalid endpoint URL '{self.endpoint}'")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")


class CompletionBackend(Protocol):
    def complete(self, messages: Sequence[ChatMessage]) -> CompletionResult: ...


def request_body(config: BackendConfig, messages: Sequence[ChatMessage]) -> dict:
    """Exact wire body; messages keep their order and roles."""
    return {
        "model": config.model,
        "temperature": config.temperature,
        "messages": [{"role": m.role, "content": m.content} for m in messages],
    }


def messages_from_wire(raw: list[dict]) -> list[ChatMessage]:
    return [ChatMessage(role=m["role"], content=m["content"]) for m in raw]


def parse_completion(payload: dict) -> CompletionResult:
    try:
        choice = payload["choices"][0]
        message = choice["message"]
        content = message.get("content")
        finish = choice.get("finish_reason") or "other"
    except (KeyError, IndexError, TypeError) as exc:
        raise MalformedResponseError(f"response missing choices/message: {exc!r}") from exc
    if finish not in ("stop", "length"):
        finish = "other"
    if finish == "stop" and not content:
        raise MalformedResponseError("finish_reason is 'stop' but content is missing")
    usage = payload.get("usage") or {}
    return CompletionResult(
        content=content or "",
        finish_reason=finish,
        prompt_token_count=usage.get("prompt_tokens"),
        completion_token_count=usage.get("completion_tokens"),
    )


def _looks_like_overflow(body: dict) -> bool:
    error = body.get("error") or {}
    code = str(error.get("code") or "")
    message = str(error.get("message") or "").lower()
    return code == "context_length_exceeded" or "context length" in message or "maximum context" in message


def complete(config: BackendConfig, messages: Sequence[ChatMessage]) -> CompletionResult:
    """One completion over an OpenAI-compatible endpoint. Never mutates input."""
    if not messages:
        raise ValueError("messages must be non-empty")
    headers = {"Content-Type": "application/json"}
    token = os.environ.get(config.auth_env)
    if token:
        headers["Authorization"] = f"Bearer {token}"

    url = f"{config.endpoint.rstrip('/')}/chat/completions"
    try:
        response = httpx.post(
            url,
            json=request_body(config, messages),
            headers=headers,
            timeout=config.timeout,
        )
    except httpx.TimeoutException as exc:
        raise BackendTimeoutError(f"backend timed out after {config.timeout}s") from exc
    except httpx.HTTPError as exc:
        raise MalformedResponseError(f"transport failure: {exc}") from exc

    if response.status_code in (401, 403):
        raise AuthError(f"authentication rejected (HTTP {response.status_code})")
    if response.status_code == 429:
        retry_after = None
        raw = response.headers.get("Retry-After")
        if raw is not None:
            try:
                retry_after = float(raw)
            except ValueError:
                retry_after = None
        raise RateLimitedError("rate limited (HTTP 429)", retry_after=retry_after)
    if response.status_code >= 400:
        try:
            body = response.json()
        except json.JSONDecodeError:
            body = {}
        if isinstance(body, dict) and _looks_like_overflow(body):
            raise ContextOverflowError("backend reported context length exceeded")
        raise MalformedResponseError(f"unexpected HTTP status {response.status_code}")

    try:
        payload = response.json()
    except json.JSONDecodeError as exc:
        raise MalformedResponseError("response body is not valid JSON") from exc
    if not isinstance(payload, dict):
        raise MalformedResponseError("response body is not a JSON object")
    return parse_completion(payload)


class HttpBackend:
    """Binds a BackendConfig to the CompletionBackend protocol."""

    def __init__(self, config: BackendConfig):
        self.config = config

    def complete(self, messages: Sequence[ChatMessage]) -> CompletionResult:
        return complete(self.config, messages)


class ScriptedBackend:
    """Deterministic stand-in returning canned replies in order.

    Records every received message list for later assertions. Calls are
    serialized internally so script order stays well-defined under
    concurrency.
    """

    def __init__(self, script: Sequence[str]):
        self._script = list(script)
        self._cursor = 0
        self._lock = threading.Lock()
        self.calls: list[list[ChatMessage]] = []

    def complete(self, messages: Sequence[ChatMessage]) -> CompletionResult:
        with self._lock:
            self.calls.append(list(messages))
            if self._cursor >= len(self._script):
                raise ScriptExhaustedError(
                    f"script exhausted after {len(self._script)} replies"
                )
            content = self._script[self._cursor]
            self._cursor += 1
        return CompletionResult(content=content)

    @property
    def remaining(self) -> int:
        with self._lock:
            return len(self._script) - self._cursor


def load_script(text: str) -> list[str]:
    """Script files are a JSON array of reply strings."""
    raw = json.loads(text)
    if not isinstance(raw, list) or not all(isinstance(x, str) for x in raw):
        raise ValueError("script file must be a JSON array of strings")
    return raw
