from __future__ import annotations

import itertools
from datetime import datetime, timezone
from pathlib import Path

import pytest

from avatar_engine import composer, fixtures
from avatar_engine.dictionary import load_default
from avatar_engine.session import SessionEngine, TokenBudget
from avatar_engine.store import SessionStore

GOLDEN_DIR = Path(__file__).parent / "golden"

FIXED_INSTANT = datetime(2024, 1, 2, 3, 4, 5, tzinfo=timezone.utc)


def fixed_clock():
    return FIXED_INSTANT


def make_id_factory(prefix: str = "s"):
    counter = itertools.count(1)
    return lambda: f"{prefix}{next(counter):04d}"


@pytest.fixture(scope="session")
def default_dict():
    return load_default()


@pytest.fixture
def gp_ethical_profile(default_dict):
    return composer.compose(default_dict, "general_practice", composer.TraitSelection.of(["ethical"]))


@pytest.fixture
def store(tmp_path):
    return SessionStore(tmp_path / "sessions")


@pytest.fixture
def engine(store):
    return SessionEngine(store=store, clock=fixed_clock, id_factory=make_id_factory())


@pytest.fixture
def small_budget():
    return TokenBudget(window_limit=4096, reply_reserve=512)


@pytest.fixture(scope="session")
def figure2():
    return {
        "case": fixtures.figure2_case(),
        "generic": fixtures.figure2_generic_reply(),
        "introduction": fixtures.figure2_introduction(),
        "specialized": fixtures.figure2_specialized_reply(),
        "profile_variant": fixtures.figure2_profile_variant(),
    }


def golden(name: str) -> str:
    return (GOLDEN_DIR / name).read_text(encoding="utf-8").rstrip("\n")
