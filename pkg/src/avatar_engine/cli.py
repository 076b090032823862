"""Command-line entry point.

Subcommands map one-to-one onto module operations: ``dict`` onto the
dictionary module, ``chat`` onto the session engine, ``eval compare`` onto
the comparison harness, ``improve`` onto the improvement pipeline, and
``serve`` onto the HTTP service. Exit codes: 0 success, 1 module error,
2 usage error.

Environment: AVATAR_API_KEY (backend auth), AVATAR_ENDPOINT (backend URL),
AVATAR_MODEL (model id), AVATAR_STORE (session store directory, default
./sessions), AVATAR_CLOCK (fixed ISO timestamp for reproducible output).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from datetime import datetime
from pathlib import Path

from . import composer, dictionary as dict_mod, evaluation, fixtures, improvement
from .backend import BackendConfig, HttpBackend, ScriptedBackend, load_script
from .errors import AvatarError
from .session import SessionEngine, TokenBudget
from .store import SessionStore

DEFAULT_ENDPOINT = "https://api.openai.com/v1"
DEFAULT_MODEL = "gpt-3.5-turbo"


def _load_dictionary(spec: str):
    if spec == "bundled":
        return dict_mod.load_default()
    return dict_mod.load_dictionary_file(spec)


def _store_from(args) -> SessionStore:
    root = getattr(args, "store", None) or os.environ.get("AVATAR_STORE", "./sessions")
    return SessionStore(root)


def _engine_kwargs() -> dict:
    fixed = os.environ.get("AVATAR_CLOCK")
    if not fixed:
        return {}
    instant = datetime.fromisoformat(fixed)
    return {"clock": lambda: instant}


def _backend_from(args):
    script_path = getattr(args, "script", None)
    kind = getattr(args, "backend", None) or ("mock" if script_path else "live")
    if kind == "mock":
        if not script_path:
            raise AvatarError("mock backend requires --script FILE")
        if script_path == "figure2":
            return ScriptedBackend(fixtures.figure2_script())
        return ScriptedBackend(load_script(Path(script_path).read_text(encoding="utf-8")))
    timeout = getattr(args, "timeout", None) or float(os.environ.get("AVATAR_TIMEOUT", "30"))
    config = BackendConfig(
        endpoint=os.environ.get("AVATAR_ENDPOINT", DEFAULT_ENDPOINT),
        model=os.environ.get("AVATAR_MODEL", DEFAULT_MODEL),
        timeout=timeout,
    )
    return HttpBackend(config)


def _selection_from(args) -> composer.TraitSelection:
    raw = getattr(args, "traits", None)
    ids = [t.strip() for t in raw.split(",") if t.strip()] if raw else []
    return composer.TraitSelection.of(ids)


# -- dict ---------------------------------------------------------------


def cmd_dict_list(args) -> int:
    d = _load_dictionary(args.dict)
    pairs = dict_mod.list_specialties(d)
    if args.json:
        print(json.dumps([{"id": i, "display_name": n} for i, n in pairs], indent=2))
    else:
        for specialty_id, display_name in pairs:
            print(f"{specialty_id}\t{display_name}")
    return 0


def cmd_dict_show(args) -> int:
    d = _load_dictionary(args.dict)
    entry = dict_mod.get_specialty(d, args.specialty_id)
    if args.json:
        print(
            json.dumps(
                {
                    "id": entry.id,
                    "display_name": entry.display_name,
                    "knowledge_clauses": list(entry.knowledge_clauses),
                },
                indent=2,
            )
        )
    else:
        print(f"{entry.display_name} ({entry.id})")
        for clause in entry.knowledge_clauses:
            print(f"  - {clause}")
    return 0


def cmd_dict_validate(args) -> int:
    d = _load_dictionary(args.source)
    report = dict_mod.validate(d)
    if args.json:
        print(
            json.dumps(
                [
                    {"code": f.code, "subject": f.subject, "message": f.message}
                    for f in report.findings
                ],
                indent=2,
            )
        )
    else:
        print(f"{len(report.findings)} findings")
        for finding in report.findings:
            print(f"  {finding.code} [{finding.subject}]: {finding.message}")
    return 0 if report.ok else 1


# -- chat ---------------------------------------------------------------


def cmd_chat(args) -> int:
    d = _load_dictionary(args.dict)
    store = _store_from(args)
    backend = _backend_from(args)
    engine = SessionEngine(store=store, **_engine_kwargs())
    budget = TokenBudget(window_limit=args.window, reply_reserve=args.reserve)

    improved = None
    if args.improve_from:
        if store.has_improved(args.improve_from):
            improved = improvement.improved_from_dict(store.read_improved(args.improve_from))
        else:
            record = store.replay(args.improve_from)
            digest = improvement.collect(record)
            improved = improvement.consolidate(digest, record.profile, record.budget)
            store.write_improved(args.improve_from, improvement.improved_to_dict(improved))
        profile = improved.base
    else:
        if not args.specialty:
            print("error: --specialty is required unless --improve-from is given", file=sys.stderr)
            return 2
        profile = composer.compose(d, args.specialty, _selection_from(args))

    session = engine.start_session(
        profile, budget, backend, improvement=improved, profile_role=args.profile_role
    )
    print(f"[session {session.session_id}]")
    print(f"avatar> {session.turns[1].content}")
    sys.stdout.flush()

    try:
        for line in sys.stdin:
            text = line.strip()
            if not text:
                continue
            if text == "/close":
                break
            turn = engine.send_message(session, text)
            print(f"avatar> {turn.content}")
            sys.stdout.flush()
    except KeyboardInterrupt:
        pass

    record = engine.close_session(session)
    print(f"[closed: {len(record.turns)} turns saved to {store.events_path(session.session_id)}]")
    return 0


# -- eval ---------------------------------------------------------------


def cmd_eval_compare(args) -> int:
    d = _load_dictionary(args.dict)
    case = fixtures.figure2_case() if args.case == "figure2" else evaluation.load_case_file(args.case)
    backend = _backend_from(args)
    selection = _selection_from(args)
    if not selection.category_ids and args.specialty == "general_practice":
        selection = composer.TraitSelection.of(["ethical"])
    profile = composer.compose(d, args.specialty, selection)

    report = evaluation.compare(case, backend, profile, out_dir=args.out)
    if args.json:
        print(json.dumps(evaluation.report_to_dict(report), indent=2, ensure_ascii=False))
    else:
        print(
            f"case {report.case_id}: specialized {report.specialized_hits} hits, "
            f"generic {report.generic_hits} hits"
        )
        print(f"verdict: {report.verdict}")
        if args.out:
            print(f"report written to {Path(args.out) / (report.case_id + '.report.json')}")
    return 0


# -- improve --------------------------------------------------------------


def cmd_improve(args) -> int:
    store = _store_from(args)
    record = store.replay(args.session)
    digest = improvement.collect(record)
    if args.llm:
        improved = improvement.llm_consolidate(digest, record.profile, _backend_from(args))
    else:
        improved = improvement.consolidate(digest, record.profile, record.budget)
    path = store.write_improved(args.session, improvement.improved_to_dict(improved))
    if args.json:
        print(json.dumps(improvement.improved_to_dict(improved), indent=2, ensure_ascii=False))
    else:
        print(f"memory ({improved.token_delta} tokens): {improved.memory_text or '<empty>'}")
        print(f"improved profile written to {path}")
    return 0


# -- serve ----------------------------------------------------------------


def cmd_serve(args) -> int:
    from .service.app import create_app, serve

    d = _load_dictionary(args.dict)
    store = _store_from(args)
    backend = _backend_from(args)
    ui_dir = args.ui_dir if args.ui_dir and Path(args.ui_dir).is_dir() else None
    if ui_dir is None and Path("frontend/index.html").exists():
        ui_dir = "frontend"
    app = create_app(d, store, backend, ui_dir=ui_dir, **_engine_kwargs())
    serve(app, bind=args.bind)
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="avatar", description="Medical avatar chatbot engine")
    sub = parser.add_subparsers(dest="command", required=True)

    p_dict = sub.add_parser("dict", help="inspect and validate dictionaries")
    dict_sub = p_dict.add_subparsers(dest="dict_command", required=True)

    p_list = dict_sub.add_parser("list", help="list specialties")
    p_list.add_argument("--dict", default="bundled", help="dictionary file or 'bundled'")
    p_list.add_argument("--json", action="store_true")
    p_list.set_defaults(func=cmd_dict_list)

    p_show = dict_sub.add_parser("show", help="show one specialty")
    p_show.add_argument("specialty_id")
    p_show.add_argument("--dict", default="bundled")
    p_show.add_argument("--json", action="store_true")
    p_show.set_defaults(func=cmd_dict_show)

    p_validate = dict_sub.add_parser("validate", help="validate a dictionary document")
    p_validate.add_argument("source", help="dictionary file or 'bundled'")
    p_validate.add_argument("--json", action="store_true")
    p_validate.set_defaults(func=cmd_dict_validate)

    p_chat = sub.add_parser("chat", help="interactive terminal chat")
    p_chat.add_argument("--specialty")
    p_chat.add_argument("--traits", help="comma-separated trait category ids")
    p_chat.add_argument("--dict", default="bundled")
    p_chat.add_argument("--backend", choices=["live", "mock"])
    p_chat.add_argument("--script", help="reply script file for the mock backend")
    p_chat.add_argument("--improve-from", dest="improve_from", help="seed from a prior session's improvement")
    p_chat.add_argument("--store")
    p_chat.add_argument("--window", type=int, default=4096)
    p_chat.add_argument("--reserve", type=int, default=512)
    p_chat.add_argument("--profile-role", dest="profile_role", choices=["system", "user"], default="system")
    p_chat.add_argument("--timeout", type=float, help="live backend request timeout (seconds)")
    p_chat.set_defaults(func=cmd_chat)

    p_eval = sub.add_parser("eval", help="evaluation runs")
    eval_sub = p_eval.add_subparsers(dest="eval_command", required=True)
    p_compare = eval_sub.add_parser("compare", help="generic vs specialized comparison")
    p_compare.add_argument("--case", required=True, help="case file or 'figure2'")
    p_compare.add_argument("--specialty", default="general_practice")
    p_compare.add_argument("--traits")
    p_compare.add_argument("--dict", default="bundled")
    p_compare.add_argument("--backend", choices=["live", "mock"])
    p_compare.add_argument("--script", help="reply script file or 'figure2'")
    p_compare.add_argument("--timeout", type=float)
    p_compare.add_argument("--out", default="./reports", help="report output directory")
    p_compare.add_argument("--json", action="store_true")
    p_compare.set_defaults(func=cmd_eval_compare)

    p_improve = sub.add_parser("improve", help="consolidate a closed session")
    p_improve.add_argument("--session", required=True)
    p_improve.add_argument("--store")
    p_improve.add_argument("--llm", action="store_true", help="delegate consolidation to the backend")
    p_improve.add_argument("--backend", choices=["live", "mock"])
    p_improve.add_argument("--script", help="reply script file for the mock backend")
    p_improve.add_argument("--timeout", type=float)
    p_improve.add_argument("--json", action="store_true")
    p_improve.set_defaults(func=cmd_improve)

    p_serve = sub.add_parser("serve", help="run the HTTP API")
    p_serve.add_argument("--bind", default="127.0.0.1:8000")
    p_serve.add_argument("--dict", default="bundled")
    p_serve.add_argument("--store")
    p_serve.add_argument("--backend", choices=["live", "mock"])
    p_serve.add_argument("--script")
    p_serve.add_argument("--timeout", type=float)
    p_serve.add_argument("--ui-dir", dest="ui_dir")
    p_serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except AvatarError as exc:
        print(f"error: {exc.code}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
