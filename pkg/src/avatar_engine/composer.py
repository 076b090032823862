"""Deterministic composition and rendering of three-segment prompt profiles.

The rendered text is a pure function of (dictionary version, specialty,
trait selection, decorations): equal inputs always produce byte-identical
prompts, which makes golden-file testing possible.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .dictionary import Dictionary, get_specialty, get_trait_category
from .errors import InvalidSelectionError

PROFILE_PREFIX = "In this dialogue session with me, you are a doctor with a specialty in "

KNOWLEDGE_LEAD = "You have the following medical knowledge: "
COMMON_LEAD = "You are a good doctor with the following characteristics: "
SPECIAL_LEAD = "Lastly, you have the following special "

PROFILE_COUNT_POLICIES = ("nonempty-category-subsets", "single-category")


class DecorationKind(str, Enum):
    AUDIENCE_PERSONA = "audience_persona"
    QUESTION_REFINEMENT = "question_refinement"
    FACT_CHECK_LIST = "fact_check_list"


@dataclass(frozen=True)
class PatternDecoration:
    """A reusable prompt transformation appended after the three segments."""

    kind: DecorationKind
    text: str

    def __post_init__(self):
        if not self.text or not self.text.strip():
            raise InvalidSelectionError(f"decoration {self.kind.value} requires non-empty text")


@dataclass(frozen=True)
class TraitSelection:
    """Selected trait categories, each optionally narrowed to a trait subset.

    ``trait_subsets`` is an ordered (category_id, traits) pair list; a
    category without an entry contributes all of its traits.
    """

    category_ids: tuple[str, ...] = ()
    trait_subsets: tuple[tuple[str, tuple[str, ...]], ...] = ()

    @classmethod
    def of(cls, category_ids, subsets: dict[str, list[str]] | None = None) -> "TraitSelection":
        pairs = tuple((k, tuple(v)) for k, v in (subsets or {}).items())
        return cls(category_ids=tuple(category_ids), trait_subsets=pairs)

    def subset_for(self, category_id: str) -> tuple[str, ...] | None:
        for cat_id, traits in self.trait_subsets:
            if cat_id == category_id:
                return traits
        return None


@dataclass(frozen=True)
class PromptProfile:
    specialty_id: str
    selection: TraitSelection
    segments: tuple[str, str, str | None]
    rendered_text: str
    pattern_decorations: tuple[PatternDecoration, ...] = ()
    dictionary_version: str = ""

    @property
    def knowledge_text(self) -> str:
        return self.segments[0]

    @property
    def common_text(self) -> str:
        return self.segments[1]

    @property
    def special_text(self) -> str | None:
        return self.segments[2]


def category_adjective(name: str) -> str:
    """'Ethical traits' -> 'ethical'; mechanical, no adjective table."""
    lowered = name.strip().lower()
    if lowered.endswith(" traits"):
        lowered = lowered[: -len(" traits")]
    return lowered


def render_decoration(decoration: PatternDecoration) -> str:
    text = decoration.text.strip()
    if decoration.kind is DecorationKind.AUDIENCE_PERSONA:
        return f"Assume I am {text}."
    if decoration.kind is DecorationKind.QUESTION_REFINEMENT:
        return (
            f"When I ask a question about {text}, suggest a better version "
            "of my question and use it instead."
        )
    return (
        f"From now on, append a set of facts about {text} that are contained in the output. "
        "The facts must be relevant to the output and be able to be checked for accuracy."
    )


def _validate_selection(dictionary: Dictionary, selection: TraitSelection) -> None:
    seen: set[str] = set()
    for category_id in selection.category_ids:
        if category_id in seen:
            raise InvalidSelectionError(f"trait category '{category_id}' selected twice")
        seen.add(category_id)
        try:
            category = get_trait_category(dictionary, category_id)
        except Exception as exc:
            raise InvalidSelectionError(f"selection references unknown trait category '{category_id}'") from exc
        subset = selection.subset_for(category_id)
        if subset is not None:
            if not subset:
                raise InvalidSelectionError(f"empty trait subset for category '{category_id}'")
            unknown = [t for t in subset if t not in category.traits]
            if unknown:
                raise InvalidSelectionError(
                    f"trait(s) {unknown} not in category '{category_id}'"
                )
    for cat_id, _ in selection.trait_subsets:
        if cat_id not in seen:
            raise InvalidSelectionError(f"trait subset given for unselected category '{cat_id}'")


def compose(
    dictionary: Dictionary,
    specialty_id: str,
    selection: TraitSelection | None = None,
    decorations: list[PatternDecoration] | tuple[PatternDecoration, ...] = (),
) -> PromptProfile:
    """Compose the three-part profile: knowledge, common, special.

    Selected categories render in selection order; traits within a category
    render in dictionary order (filtered to the subset when one is given)
    and are lowercased by the renderer.
    """
    selection = selection or TraitSelection()
    entry = get_specialty(dictionary, specialty_id)
    _validate_selection(dictionary, selection)

    knowledge = (
        f"{PROFILE_PREFIX}{entry.display_name.lower()}. "
        f"{KNOWLEDGE_LEAD}{'; '.join(entry.knowledge_clauses)}."
    )
    common = f"{COMMON_LEAD}{', '.join(dictionary.common.descriptors)}."

    special: str | None = None
    if selection.category_ids:
        adjectives = []
        traits: list[str] = []
        for category_id in selection.category_ids:
            category = get_trait_category(dictionary, category_id)
            adjectives.append(category_adjective(category.name))
            subset = selection.subset_for(category_id)
            chosen = [t for t in category.traits if subset is None or t in subset]
            traits.extend(t.lower() for t in chosen)
        special = (
            f"{SPECIAL_LEAD}{', '.join(adjectives)} characteristics: {', '.join(traits)}."
        )

    parts = [knowledge, common]
    if special is not None:
        parts.append(special)
    decorations = tuple(decorations)
    parts.extend(render_decoration(d) for d in decorations)
    rendered = " ".join(parts)

    return PromptProfile(
        specialty_id=specialty_id,
        selection=selection,
        segments=(knowledge, common, special),
        rendered_text=rendered,
        pattern_decorations=decorations,
        dictionary_version=dictionary.version,
    )


def render(profile: PromptProfile) -> str:
    """The profile's full prompt text; byte-identical on repeated calls."""
    return profile.rendered_text


def count_profiles(dictionary: Dictionary, policy: str = "nonempty-category-subsets") -> int:
    """Count distinct (specialty, category-subset) profiles under a policy.

    Per-category trait subsets are treated as not varying. Policies:
    'nonempty-category-subsets' counts every non-empty set of categories,
    'single-category' counts exactly-one-category profiles.
    """
    if policy not in PROFILE_COUNT_POLICIES:
        raise ValueError(f"unknown policy '{policy}'; expected one of {PROFILE_COUNT_POLICIES}")
    n_specialties = len(dictionary.specialties)
    n_categories = len(dictionary.trait_categories)
    if policy == "single-category":
        return n_specialties * n_categories
    return n_specialties * (2**n_categories - 1)


def profile_to_dict(profile: PromptProfile) -> dict:
    return {
        "specialty_id": profile.specialty_id,
        "selection": {
            "category_ids": list(profile.selection.category_ids),
            "trait_subsets": {k: list(v) for k, v in profile.selection.trait_subsets},
        },
        "segments": list(profile.segments),
        "rendered_text": profile.rendered_text,
        "pattern_decorations": [
            {"kind": d.kind.value, "text": d.text} for d in profile.pattern_decorations
        ],
        "dictionary_version": profile.dictionary_version,
    }


def profile_from_dict(raw: dict) -> PromptProfile:
    selection = TraitSelection(
        category_ids=tuple(raw["selection"]["category_ids"]),
        trait_subsets=tuple(
            (k, tuple(v)) for k, v in raw["selection"]["trait_subsets"].items()
        ),
    )
    segments = raw["segments"]
    return PromptProfile(
        specialty_id=raw["specialty_id"],
        selection=selection,
        segments=(segments[0], segments[1], segments[2]),
        rendered_text=raw["rendered_text"],
        pattern_decorations=tuple(
            PatternDecoration(kind=DecorationKind(d["kind"]), text=d["text"])
            for d in raw["pattern_decorations"]
        ),
        dictionary_version=raw["dictionary_version"],
    )
