"""Avatar engine: prompt-profile composition, dialogue sessions, prompt
improvement, and evaluation for persona-driven medical chatbots."""

from .backend import BackendConfig, ChatMessage, CompletionResult, HttpBackend, ScriptedBackend
from .composer import PatternDecoration, PromptProfile, TraitSelection, compose, count_profiles, render
from .dictionary import Dictionary, load_default, load_dictionary, serialize, validate
from .errors import AvatarError
from .evaluation import PatientCase, compare, run_case, score_keywords
from .improvement import DialogueDigest, ImprovedProfile, collect, consolidate, llm_consolidate
from .session import DialogueSession, SessionEngine, SessionRecord, TokenBudget, estimate_tokens
from .store import SessionStore

__version__ = "0.1.0"

__all__ = [
    "AvatarError",
    "BackendConfig",
    "ChatMessage",
    "CompletionResult",
    "DialogueDigest",
    "DialogueSession",
    "Dictionary",
    "HttpBackend",
    "ImprovedProfile",
    "PatientCase",
    "PatternDecoration",
    "PromptProfile",
    "ScriptedBackend",
    "SessionEngine",
    "SessionRecord",
    "SessionStore",
    "TokenBudget",
    "TraitSelection",
    "collect",
    "compare",
    "compose",
    "consolidate",
    "count_profiles",
    "estimate_tokens",
    "llm_consolidate",
    "load_default",
    "load_dictionary",
    "render",
    "run_case",
    "score_keywords",
    "serialize",
    "validate",
]
