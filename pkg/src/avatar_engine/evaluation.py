"""Generic-versus-specialized comparison harness for patient cases.

Runs one patient case twice: once as a bare prompt (generic arm) and once
inside a fresh session initialized with a prompt profile (specialized arm),
then scores both transcripts by keyword hits. With a scripted backend the
whole report is byte-stable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .backend import ChatMessage, CompletionBackend
from .composer import PromptProfile
from .errors import BackendError, InvalidCaseError, ParseError, SchemaError
from .session import SessionEngine, TokenBudget, estimate_tokens

DEFAULT_EVAL_BUDGET = TokenBudget(window_limit=8192, reply_reserve=1024)

_CASE_FIELDS = {"id", "narrative", "question", "expected_keywords"}


@dataclass(frozen=True)
class PatientCase:
    id: str
    narrative: str
    question: str
    expected_keywords: tuple[str, ...]

    @property
    def case_text(self) -> str:
        return f"{self.narrative}\n\n{self.question}"


@dataclass(frozen=True)
class TranscriptMessage:
    role: str
    content: str


@dataclass(frozen=True)
class Transcript:
    arm: str  # generic | specialized
    messages: tuple[TranscriptMessage, ...]
    failure: str | None = None

    def assistant_text(self) -> str:
        return "\n".join(m.content for m in self.messages if m.role == "assistant")

    def token_estimate(self, estimator=estimate_tokens) -> int:
        return sum(estimator(m.content) for m in self.messages)


@dataclass(frozen=True)
class ComparisonReport:
    case_id: str
    keywords: tuple[str, ...]
    generic: Transcript
    specialized: Transcript
    generic_hits: int
    specialized_hits: int
    generic_tokens: int
    specialized_tokens: int
    verdict: str  # specialized | tie | generic


def load_case(text: str) -> PatientCase:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"case file is not valid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from exc
    if not isinstance(raw, dict):
        raise SchemaError("case document must be an object")
    unknown = set(raw) - _CASE_FIELDS
    if unknown:
        raise SchemaError(f"unknown case field(s): {sorted(unknown)}")
    missing = _CASE_FIELDS - set(raw)
    if missing:
        raise SchemaError(f"case document missing field(s): {sorted(missing)}")
    if not isinstance(raw["narrative"], str) or not raw["narrative"].strip():
        raise SchemaError("case narrative must be non-empty")
    if not isinstance(raw["question"], str) or not raw["question"].strip():
        raise SchemaError("case question must be non-empty")
    keywords = raw["expected_keywords"]
    if not isinstance(keywords, list) or not all(isinstance(k, str) for k in keywords):
        raise SchemaError("expected_keywords must be an array of strings")
    return PatientCase(
        id=str(raw["id"]),
        narrative=raw["narrative"],
        question=raw["question"],
        expected_keywords=tuple(keywords),
    )


def load_case_file(path: str | Path) -> PatientCase:
    return load_case(Path(path).read_text(encoding="utf-8"))


def run_case(
    case: PatientCase,
    profile: PromptProfile | None,
    backend: CompletionBackend,
    *,
    budget: TokenBudget = DEFAULT_EVAL_BUDGET,
    out_dir: str | Path | None = None,
) -> Transcript:
    """One arm. No profile: the backend sees only the case text. With a
    profile: a fresh session is started (profile + introduction) and the
    case text is sent as the first user message."""
    if not case.narrative.strip() or not case.question.strip():
        raise InvalidCaseError("case narrative and question must be non-empty")

    arm = "generic" if profile is None else "specialized"
    try:
        if profile is None:
            result = backend.complete([ChatMessage(role="user", content=case.case_text)])
            messages = (
                TranscriptMessage(role="user", content=case.case_text),
                TranscriptMessage(role="assistant", content=result.content),
            )
        else:
            engine = SessionEngine(store=None)
            session = engine.start_session(profile, budget, backend)
            engine.send_message(session, case.case_text)
            messages = tuple(
                TranscriptMessage(role=t.role, content=t.content) for t in session.turns
            )
        transcript = Transcript(arm=arm, messages=messages)
    except BackendError as exc:
        transcript = Transcript(arm=arm, messages=(), failure=f"{exc.code}: {exc}")
    if out_dir is not None:
        write_transcript(case.id, transcript, out_dir)
    return transcript


def write_transcript(case_id: str, transcript: Transcript, out_dir: str | Path) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{case_id}.{transcript.arm}.transcript.json"
    doc = {
        "case_id": case_id,
        "arm": transcript.arm,
        "failure": transcript.failure,
        "messages": [{"role": m.role, "content": m.content} for m in transcript.messages],
    }
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    return path


def score_keywords(transcript: Transcript, expected_keywords) -> int:
    """Distinct expected keywords present (case-insensitive substring) in
    assistant turns only."""
    haystack = transcript.assistant_text().lower()
    return sum(1 for k in dict.fromkeys(expected_keywords) if k.lower() in haystack)


def _verdict(specialized_hits: int, generic_hits: int) -> str:
    if specialized_hits > generic_hits:
        return "specialized"
    if generic_hits > specialized_hits:
        return "generic"
    return "tie"


def compare(
    case: PatientCase,
    backend: CompletionBackend,
    profile: PromptProfile,
    *,
    budget: TokenBudget = DEFAULT_EVAL_BUDGET,
    out_dir: str | Path | None = None,
) -> ComparisonReport:
    """Run both arms (generic first), score, and assemble the report.

    A backend failure aborts only its arm; the failed arm scores zero and
    is marked in the report.
    """
    generic = run_case(case, None, backend, budget=budget, out_dir=out_dir)
    specialized = run_case(case, profile, backend, budget=budget, out_dir=out_dir)

    generic_hits = score_keywords(generic, case.expected_keywords)
    specialized_hits = score_keywords(specialized, case.expected_keywords)

    report = ComparisonReport(
        case_id=case.id,
        keywords=case.expected_keywords,
        generic=generic,
        specialized=specialized,
        generic_hits=generic_hits,
        specialized_hits=specialized_hits,
        generic_tokens=generic.token_estimate(),
        specialized_tokens=specialized.token_estimate(),
        verdict=_verdict(specialized_hits, generic_hits),
    )
    if out_dir is not None:
        write_report(report, out_dir)
    return report


def report_to_dict(report: ComparisonReport) -> dict:
    def arm(transcript: Transcript, hits: int, tokens: int) -> dict:
        return {
            "hits": hits,
            "tokens": tokens,
            "failure": transcript.failure,
            "transcript": [{"role": m.role, "content": m.content} for m in transcript.messages],
        }

    return {
        "case_id": report.case_id,
        "keywords": list(report.keywords),
        "verdict": report.verdict,
        "generic": arm(report.generic, report.generic_hits, report.generic_tokens),
        "specialized": arm(report.specialized, report.specialized_hits, report.specialized_tokens),
    }


def render_side_by_side(report: ComparisonReport, width: int = 48) -> str:
    """Two-column text rendering of the paired transcripts."""
    import textwrap

    def column(transcript: Transcript) -> list[str]:
        lines: list[str] = []
        if transcript.failure:
            lines.append(f"[arm failed: {transcript.failure}]")
        for message in transcript.messages:
            lines.append(f"{message.role}:")
            lines.extend(textwrap.wrap(message.content, width=width) or [""])
            lines.append("")
        return lines

    left = column(report.generic)
    right = column(report.specialized)
    header_left = f"GENERIC (hits {report.generic_hits}, ~{report.generic_tokens} tok)"
    header_right = f"SPECIALIZED (hits {report.specialized_hits}, ~{report.specialized_tokens} tok)"

    rows = [
        f"case: {report.case_id}   verdict: {report.verdict}",
        f"keywords: {', '.join(report.keywords)}",
        "",
        f"{header_left:<{width}} | {header_right}",
        f"{'-' * width} | {'-' * width}",
    ]
    for i in range(max(len(left), len(right))):
        l = left[i] if i < len(left) else ""
        r = right[i] if i < len(right) else ""
        rows.append(f"{l:<{width}} | {r}")
    return "\n".join(rows) + "\n"


def write_report(report: ComparisonReport, out_dir: str | Path) -> tuple[Path, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    json_path = out / f"{report.case_id}.report.json"
    text_path = out / f"{report.case_id}.report.txt"
    json_path.write_text(
        json.dumps(report_to_dict(report), indent=2, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    text_path.write_text(render_side_by_side(report), encoding="utf-8")
    return json_path, text_path
