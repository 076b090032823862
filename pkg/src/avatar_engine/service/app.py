"""HTTP API over the avatar engine.

Every endpoint is a thin pass-through to the corresponding module
operation; the table below is the single mapping between module errors and
HTTP statuses.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .. import composer, improvement
from ..backend import CompletionBackend
from ..dictionary import Dictionary, list_specialties, list_trait_categories
from ..errors import AvatarError, RateLimitedError
from ..session import DialogueSession, SessionEngine, TokenBudget
from ..store import SessionStore
from . import schemas

# Module error code -> HTTP status. Documented in the README.
ERROR_STATUS: dict[str, int] = {
    "ParseError": 400,
    "SchemaError": 400,
    "UnknownId": 404,
    "InvalidSelection": 422,
    "EmptyMessage": 422,
    "InvalidTurn": 422,
    "BudgetTooSmall": 422,
    "EmptySession": 422,
    "InvalidCase": 422,
    "SessionClosed": 409,
    "NothingToRegenerate": 409,
    "IncompleteRecord": 409,
    "MessageTooLarge": 413,
    "AuthError": 502,
    "Timeout": 502,
    "ContextOverflow": 502,
    "MalformedResponse": 502,
    "ScriptExhausted": 502,
    "BackendError": 502,
    "RateLimited": 503,
}


def _selection_from(body) -> composer.TraitSelection:
    return composer.TraitSelection.of(body.trait_category_ids, body.trait_subsets)


def _decorations_from(body) -> list[composer.PatternDecoration]:
    return [
        composer.PatternDecoration(kind=composer.DecorationKind(d.kind), text=d.text)
        for d in body.decorations
    ]


def _turn_out(turn) -> schemas.TurnOut:
    return schemas.TurnOut(
        index=turn.index,
        role=turn.role,
        content=turn.content,
        token_estimate=turn.token_estimate,
        regeneration_history=list(turn.regeneration_history),
        created_at=turn.created_at,
    )


def _session_out(session: DialogueSession) -> schemas.SessionOut:
    return schemas.SessionOut(
        session_id=session.session_id,
        state=session.state,
        specialty_id=session.profile.specialty_id,
        trait_category_ids=list(session.profile.selection.category_ids),
        profile_text=session.prompt_text,
        budget=schemas.BudgetIn(
            window_limit=session.budget.window_limit,
            reply_reserve=session.budget.reply_reserve,
        ),
        improvement_source=session.improvement_source,
        turns=[_turn_out(t) for t in session.turns],
        feedback=[
            schemas.FeedbackOut(
                turn_index=f.turn_index,
                rating=f.rating,
                comment=f.comment,
                created_at=f.created_at,
            )
            for f in session.feedback
        ],
    )


def _improved_out(improved: improvement.ImprovedProfile) -> schemas.ImprovedOut:
    return schemas.ImprovedOut(
        source_session_id=improved.source_session_id,
        memory_text=improved.memory_text,
        token_delta=improved.token_delta,
        truncated=improved.truncated,
        rendered_text=improved.rendered_text,
    )


def create_app(
    dictionary: Dictionary,
    store: SessionStore,
    backend: CompletionBackend,
    *,
    clock=None,
    id_factory=None,
    ui_dir: str | Path | None = None,
) -> FastAPI:
    engine_kwargs = {}
    if clock is not None:
        engine_kwargs["clock"] = clock
    if id_factory is not None:
        engine_kwargs["id_factory"] = id_factory
    engine = SessionEngine(store=store, **engine_kwargs)

    app = FastAPI(title="avatar-engine", version="0.1.0")
    app.state.engine = engine
    app.state.dictionary = dictionary
    app.state.store = store
    app.state.backend = backend

    @app.exception_handler(AvatarError)
    def on_engine_error(request: Request, exc: AvatarError):
        status = ERROR_STATUS.get(exc.code, 500)
        headers = {}
        if isinstance(exc, RateLimitedError) and exc.retry_after is not None:
            headers["Retry-After"] = str(int(exc.retry_after))
        return JSONResponse(
            status_code=status,
            content={"code": exc.code, "message": str(exc)},
            headers=headers,
        )

    @app.exception_handler(RequestValidationError)
    def on_validation_error(request: Request, exc: RequestValidationError):
        # Unknown request fields are a 400; other body problems stay 422.
        extra = [e for e in exc.errors() if e.get("type") == "extra_forbidden"]
        if extra:
            fields = ", ".join(str(e["loc"][-1]) for e in extra)
            return JSONResponse(
                status_code=400,
                content={"code": "UnknownField", "message": f"unknown request field(s): {fields}"},
            )
        return JSONResponse(
            status_code=422,
            content={"code": "ValidationError", "message": str(exc.errors())},
        )

    @app.get("/v1/specialties")
    def get_specialties() -> list[schemas.SpecialtyOut]:
        return [
            schemas.SpecialtyOut(id=sid, display_name=name)
            for sid, name in list_specialties(dictionary)
        ]

    @app.get("/v1/trait-categories")
    def get_trait_categories() -> list[schemas.TraitCategoryOut]:
        return [
            schemas.TraitCategoryOut(id=cid, name=name, traits=list(traits))
            for cid, name, traits in list_trait_categories(dictionary)
        ]

    @app.post("/v1/profiles/preview")
    def preview_profile(body: schemas.ProfileSpecIn) -> schemas.ProfilePreviewOut:
        profile = composer.compose(
            dictionary, body.specialty_id, _selection_from(body), _decorations_from(body)
        )
        return schemas.ProfilePreviewOut(
            profile_text=profile.rendered_text, segments=list(profile.segments)
        )

    @app.post("/v1/sessions", status_code=201)
    def create_session(body: schemas.CreateSessionIn) -> schemas.CreateSessionOut:
        budget = TokenBudget(
            window_limit=body.budget.window_limit, reply_reserve=body.budget.reply_reserve
        )
        improved = None
        if body.improved_profile_id is not None:
            improved = improvement.improved_from_dict(store.read_improved(body.improved_profile_id))
            profile = improved.base
        else:
            if body.specialty_id is None:
                raise RequestValidationError(
                    [{"loc": ("body", "specialty_id"), "msg": "required", "type": "missing"}]
                )
            profile = composer.compose(
                dictionary, body.specialty_id, _selection_from(body), _decorations_from(body)
            )
        session = engine.start_session(
            profile,
            budget,
            backend,
            improvement=improved,
            profile_role=body.profile_role,
        )
        return schemas.CreateSessionOut(
            session_id=session.session_id,
            profile_text=session.prompt_text,
            introduction=session.turns[1].content,
        )

    @app.get("/v1/sessions/{session_id}")
    def get_session(session_id: str) -> schemas.SessionOut:
        return _session_out(engine.get_session(session_id))

    @app.post("/v1/sessions/{session_id}/messages")
    def post_message(session_id: str, body: schemas.MessageIn) -> schemas.TurnOut:
        session = engine.get_session(session_id)
        return _turn_out(engine.send_message(session, body.text))

    @app.post("/v1/sessions/{session_id}/regenerate")
    def post_regenerate(session_id: str) -> schemas.TurnOut:
        session = engine.get_session(session_id)
        return _turn_out(engine.regenerate(session))

    @app.post("/v1/sessions/{session_id}/feedback")
    def post_feedback(session_id: str, body: schemas.FeedbackIn) -> schemas.FeedbackOut:
        session = engine.get_session(session_id)
        entry = engine.record_feedback(session, body.turn_index, body.rating, body.comment)
        return schemas.FeedbackOut(
            turn_index=entry.turn_index,
            rating=entry.rating,
            comment=entry.comment,
            created_at=entry.created_at,
        )

    @app.post("/v1/sessions/{session_id}/close")
    def post_close(session_id: str) -> schemas.CloseOut:
        session = engine.get_session(session_id)
        record = engine.close_session(session)
        return schemas.CloseOut(
            session_id=record.session_id,
            state="Closed",
            turn_count=len(record.turns),
            closed_at=record.closed_at,
        )

    @app.post("/v1/sessions/{session_id}/improve")
    def post_improve(session_id: str) -> schemas.ImprovedOut:
        session = engine.get_session(session_id)
        record = session.record
        if record is None:
            record = engine.close_session(session)
        digest = improvement.collect(record)
        improved = improvement.consolidate(digest, record.profile, record.budget)
        store.write_improved(session_id, improvement.improved_to_dict(improved))
        return _improved_out(improved)

    if ui_dir is not None and Path(ui_dir).is_dir():
        app.mount("/ui", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(app: FastAPI, bind: str = "127.0.0.1:8000") -> None:
    import uvicorn

    host, _, port = bind.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="warning")
