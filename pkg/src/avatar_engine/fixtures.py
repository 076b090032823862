"""Bundled transcript fixtures for the packaged patient case.

These are the only ground-truth transcripts available for the comparison
workflow, so they ship with the package: the case document, the generic
reply, the specialized session's introduction and reply, and the
alternative typed-profile wording kept purely as a test fixture.
"""

from __future__ import annotations

from importlib import resources

from .evaluation import PatientCase, load_case

_DATA = "avatar_engine.data.figure2"


def _read(name: str) -> str:
    return resources.files(_DATA).joinpath(name).read_text("utf-8")


def figure2_case() -> PatientCase:
    return load_case(_read("case.json"))


def figure2_generic_reply() -> str:
    return _read("generic_reply.txt").rstrip("\n")


def figure2_introduction() -> str:
    return _read("introduction.txt").rstrip("\n")


def figure2_specialized_reply() -> str:
    return _read("specialized_reply.txt").rstrip("\n")


def figure2_profile_variant() -> str:
    return _read("profile_variant_2b.txt").rstrip("\n")


def figure2_script() -> list[str]:
    """Replies in `eval compare` consumption order: generic arm, then the
    specialized session's introduction and case reply."""
    return [
        figure2_generic_reply(),
        figure2_introduction(),
        figure2_specialized_reply(),
    ]
