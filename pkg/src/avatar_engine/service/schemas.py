"""Pydantic request/response models for the /v1 HTTP API.

Unknown request fields are rejected (mapped to HTTP 400 by the app-level
validation handler).
"""

from __future__ import annotations

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class SpecialtyOut(StrictModel):
    id: str
    display_name: str


class TraitCategoryOut(StrictModel):
    id: str
    name: str
    traits: list[str]


class BudgetIn(StrictModel):
    window_limit: int = Field(default=4096, gt=0)
    reply_reserve: int = Field(default=512, gt=0)


class DecorationIn(StrictModel):
    kind: Literal["audience_persona", "question_refinement", "fact_check_list"]
    text: str


class ProfileSpecIn(StrictModel):
    specialty_id: str
    trait_category_ids: list[str] = Field(default_factory=list)
    trait_subsets: dict[str, list[str]] | None = None
    decorations: list[DecorationIn] = Field(default_factory=list)


class ProfilePreviewOut(StrictModel):
    profile_text: str
    segments: list[str | None]


class CreateSessionIn(StrictModel):
    specialty_id: str | None = None
    trait_category_ids: list[str] = Field(default_factory=list)
    trait_subsets: dict[str, list[str]] | None = None
    decorations: list[DecorationIn] = Field(default_factory=list)
    budget: BudgetIn = Field(default_factory=BudgetIn)
    profile_role: Literal["system", "user"] = "system"
    improved_profile_id: str | None = None


class CreateSessionOut(StrictModel):
    session_id: str
    profile_text: str
    introduction: str


class MessageIn(StrictModel):
    text: str


class TurnOut(StrictModel):
    index: int
    role: str
    content: str
    token_estimate: int
    regeneration_history: list[str]
    created_at: str


class FeedbackIn(StrictModel):
    turn_index: int
    rating: Literal["positive", "negative"]
    comment: str | None = None


class FeedbackOut(StrictModel):
    turn_index: int
    rating: str
    comment: str | None
    created_at: str


class SessionOut(StrictModel):
    session_id: str
    state: str
    specialty_id: str
    trait_category_ids: list[str]
    profile_text: str
    budget: BudgetIn
    improvement_source: str | None
    turns: list[TurnOut]
    feedback: list[FeedbackOut]


class CloseOut(StrictModel):
    session_id: str
    state: str
    turn_count: int
    closed_at: str


class ImprovedOut(StrictModel):
    source_session_id: str
    memory_text: str
    token_delta: int
    truncated: bool
    rendered_text: str


class ErrorOut(StrictModel):
    code: str
    message: str
