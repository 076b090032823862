"""Three-category prompt dictionary: loading, validation, and queries.

A dictionary bundles the three corpora every avatar is composed from:
specialty knowledge entries, the shared exceptional-doctor descriptors,
and the selectable personality trait categories. Values are immutable
after load and safe to share across threads.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ParseError, SchemaError, UnknownIdError

_TOP_LEVEL_FIELDS = {"version", "specialties", "common_characteristics", "trait_categories"}
_SPECIALTY_FIELDS = {"id", "display_name", "knowledge_clauses"}
_CATEGORY_FIELDS = {"id", "name", "traits"}


@dataclass(frozen=True)
class SpecialtyEntry:
    """One avatar role: a stable id, a display name, and its knowledge clauses."""

    id: str
    display_name: str
    knowledge_clauses: tuple[str, ...]


@dataclass(frozen=True)
class CommonCharacteristics:
    """Descriptors of an exceptional doctor, shared by every avatar."""

    descriptors: tuple[str, ...]


@dataclass(frozen=True)
class TraitCategory:
    """A named group of selectable personality traits."""

    id: str
    name: str
    traits: tuple[str, ...]


@dataclass(frozen=True)
class Dictionary:
    version: str
    specialties: tuple[SpecialtyEntry, ...]
    common: CommonCharacteristics
    trait_categories: tuple[TraitCategory, ...]

    def specialty_ids(self) -> tuple[str, ...]:
        return tuple(s.id for s in self.specialties)

    def category_ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.trait_categories)


@dataclass(frozen=True)
class Finding:
    """One violated invariant: a machine code plus the offending id."""

    code: str
    subject: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    findings: tuple[Finding, ...]

    @property
    def ok(self) -> bool:
        return not self.findings


def _require(condition: bool, message: str) -> None:
    if not condition:
        raise SchemaError(message)


def _clean_clause(raw: object, owner: str) -> str:
    _require(isinstance(raw, str), f"specialty '{owner}': knowledge clause must be a string")
    # The renderer owns punctuation: clauses are stored trimmed, without a
    # terminal period.
    clause = raw.strip().rstrip(".").strip()
    _require(bool(clause), f"specialty '{owner}': empty knowledge clause")
    return clause


def _parse_specialty(raw: object) -> SpecialtyEntry:
    _require(isinstance(raw, dict), "specialty entry must be an object")
    unknown = set(raw) - _SPECIALTY_FIELDS
    _require(not unknown, f"unknown specialty field(s): {sorted(unknown)}")
    for field in _SPECIALTY_FIELDS:
        _require(field in raw, f"specialty entry missing field '{field}'")
    entry_id = raw["id"]
    _require(isinstance(entry_id, str) and entry_id, "specialty id must be a non-empty string")
    _require(entry_id == entry_id.lower(), f"specialty id '{entry_id}' must be lowercase")
    display = raw["display_name"]
    _require(isinstance(display, str) and display.strip(), f"specialty '{entry_id}': empty display_name")
    clauses = raw["knowledge_clauses"]
    _require(isinstance(clauses, list) and clauses, f"specialty '{entry_id}': knowledge_clauses must be a non-empty array")
    return SpecialtyEntry(
        id=entry_id,
        display_name=display.strip(),
        knowledge_clauses=tuple(_clean_clause(c, entry_id) for c in clauses),
    )


def _parse_category(raw: object) -> TraitCategory:
    _require(isinstance(raw, dict), "trait category must be an object")
    unknown = set(raw) - _CATEGORY_FIELDS
    _require(not unknown, f"unknown trait category field(s): {sorted(unknown)}")
    for field in _CATEGORY_FIELDS:
        _require(field in raw, f"trait category missing field '{field}'")
    cat_id = raw["id"]
    _require(isinstance(cat_id, str) and cat_id, "trait category id must be a non-empty string")
    _require(cat_id == cat_id.lower(), f"trait category id '{cat_id}' must be lowercase")
    name = raw["name"]
    _require(isinstance(name, str) and name.strip(), f"trait category '{cat_id}': empty name")
    traits = raw["traits"]
    _require(isinstance(traits, list) and traits, f"trait category '{cat_id}': traits must be a non-empty array")
    cleaned = []
    for trait in traits:
        _require(isinstance(trait, str) and trait.strip(), f"trait category '{cat_id}': empty trait")
        cleaned.append(trait.strip())
    return TraitCategory(id=cat_id, name=name.strip(), traits=tuple(cleaned))


def load_dictionary(source: str) -> Dictionary:
    """Parse and strictly validate a dictionary document (JSON text).

    Raises ParseError for malformed JSON (with position) and SchemaError for
    structural violations: missing/unknown fields, empty clause lists,
    duplicate ids.
    """
    try:
        raw = json.loads(source)
    except json.JSONDecodeError as exc:
        raise ParseError(f"not valid JSON: {exc.msg}", line=exc.lineno, column=exc.colno) from exc

    _require(isinstance(raw, dict), "top-level value must be an object")
    unknown = set(raw) - _TOP_LEVEL_FIELDS
    _require(not unknown, f"unknown top-level field(s): {sorted(unknown)}")
    for field in _TOP_LEVEL_FIELDS:
        _require(field in raw, f"missing top-level field '{field}'")

    version = raw["version"]
    _require(isinstance(version, str) and version, "version must be a non-empty string")

    raw_specialties = raw["specialties"]
    _require(isinstance(raw_specialties, list) and raw_specialties, "specialties must be a non-empty array")
    specialties = tuple(_parse_specialty(s) for s in raw_specialties)
    seen: set[str] = set()
    for entry in specialties:
        _require(entry.id not in seen, f"duplicate specialty id '{entry.id}'")
        seen.add(entry.id)

    raw_common = raw["common_characteristics"]
    _require(isinstance(raw_common, list) and raw_common, "common_characteristics must be a non-empty array")
    descriptors = []
    for descriptor in raw_common:
        _require(isinstance(descriptor, str) and descriptor.strip(), "empty common characteristic")
        descriptors.append(descriptor.strip())

    raw_categories = raw["trait_categories"]
    _require(isinstance(raw_categories, list) and raw_categories, "trait_categories must be a non-empty array")
    categories = tuple(_parse_category(c) for c in raw_categories)
    seen = set()
    for category in categories:
        _require(category.id not in seen, f"duplicate trait category id '{category.id}'")
        seen.add(category.id)

    return Dictionary(
        version=version,
        specialties=specialties,
        common=CommonCharacteristics(descriptors=tuple(descriptors)),
        trait_categories=categories,
    )


def load_dictionary_file(path: str | Path) -> Dictionary:
    return load_dictionary(Path(path).read_text(encoding="utf-8"))


def load_default() -> Dictionary:
    """Load the bundled default dictionary (40 specialties, 9 trait categories)."""
    text = resources.files("avatar_engine.data").joinpath("default_dictionary.json").read_text("utf-8")
    return load_dictionary(text)


def serialize(dictionary: Dictionary) -> str:
    """Render a Dictionary back to its document form. load ∘ serialize is identity."""
    doc = {
        "version": dictionary.version,
        "specialties": [
            {
                "id": s.id,
                "display_name": s.display_name,
                "knowledge_clauses": list(s.knowledge_clauses),
            }
            for s in dictionary.specialties
        ],
        "common_characteristics": list(dictionary.common.descriptors),
        "trait_categories": [
            {"id": c.id, "name": c.name, "traits": list(c.traits)}
            for c in dictionary.trait_categories
        ],
    }
    return json.dumps(doc, indent=2, ensure_ascii=False) + "\n"


def validate(dictionary: Dictionary) -> ValidationReport:
    """Check every type invariant; findings are data, never raised.

    Finding codes map one-to-one onto invariants:
    NO_SPECIALTIES, NO_TRAIT_CATEGORIES, EMPTY_SPECIALTY_ID,
    DUPLICATE_SPECIALTY_ID, EMPTY_KNOWLEDGE, BLANK_CLAUSE, EMPTY_COMMON,
    BLANK_DESCRIPTOR, EMPTY_CATEGORY_ID, DUPLICATE_CATEGORY_ID,
    EMPTY_TRAITS, BLANK_TRAIT.
    """
    findings: list[Finding] = []

    def finding(code: str, subject: str, message: str) -> None:
        findings.append(Finding(code=code, subject=subject, message=message))

    if not dictionary.specialties:
        finding("NO_SPECIALTIES", "<dictionary>", "dictionary has no specialties")
    if not dictionary.trait_categories:
        finding("NO_TRAIT_CATEGORIES", "<dictionary>", "dictionary has no trait categories")

    seen: set[str] = set()
    for entry in dictionary.specialties:
        if not entry.id:
            finding("EMPTY_SPECIALTY_ID", entry.display_name or "<unnamed>", "specialty id is empty")
        elif entry.id in seen:
            finding("DUPLICATE_SPECIALTY_ID", entry.id, f"specialty id '{entry.id}' appears more than once")
        else:
            seen.add(entry.id)
        if not entry.knowledge_clauses:
            finding("EMPTY_KNOWLEDGE", entry.id, f"specialty '{entry.id}' has no knowledge clauses")
        for clause in entry.knowledge_clauses:
            if not clause.strip():
                finding("BLANK_CLAUSE", entry.id, f"specialty '{entry.id}' has a blank knowledge clause")

    if not dictionary.common.descriptors:
        finding("EMPTY_COMMON", "<common>", "common characteristics list is empty")
    for descriptor in dictionary.common.descriptors:
        if not descriptor.strip():
            finding("BLANK_DESCRIPTOR", "<common>", "blank common characteristic")

    seen = set()
    for category in dictionary.trait_categories:
        if not category.id:
            finding("EMPTY_CATEGORY_ID", category.name or "<unnamed>", "trait category id is empty")
        elif category.id in seen:
            finding("DUPLICATE_CATEGORY_ID", category.id, f"trait category id '{category.id}' appears more than once")
        else:
            seen.add(category.id)
        if not category.traits:
            finding("EMPTY_TRAITS", category.id, f"trait category '{category.id}' has no traits")
        for trait in category.traits:
            if not trait.strip():
                finding("BLANK_TRAIT", category.id, f"trait category '{category.id}' has a blank trait")

    return ValidationReport(findings=tuple(findings))


def list_specialties(dictionary: Dictionary) -> list[tuple[str, str]]:
    """(id, display_name) pairs in document order."""
    return [(s.id, s.display_name) for s in dictionary.specialties]


def get_specialty(dictionary: Dictionary, specialty_id: str) -> SpecialtyEntry:
    for entry in dictionary.specialties:
        if entry.id == specialty_id:
            return entry
    raise UnknownIdError(f"unknown specialty '{specialty_id}'")


def list_trait_categories(dictionary: Dictionary) -> list[tuple[str, str, tuple[str, ...]]]:
    """(id, name, traits) triples in document order."""
    return [(c.id, c.name, c.traits) for c in dictionary.trait_categories]


def get_trait_category(dictionary: Dictionary, category_id: str) -> TraitCategory:
    for category in dictionary.trait_categories:
        if category.id == category_id:
            return category
    raise UnknownIdError(f"unknown trait category '{category_id}'")
