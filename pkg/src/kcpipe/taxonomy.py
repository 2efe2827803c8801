"""Controlled vocabulary of knowledge-component types.

Eighteen canonical types, each with a category and a specificity rank
(1 = most concrete, 18 = most encompassing). Raw type labels coming back
from the extraction provider are resolved against this table with tolerant
matching: case and surrounding whitespace are ignored, internal whitespace
runs collapse, and hyphens count as spaces ("meta-pattern" == "Meta pattern").
Anything else is preserved verbatim as an off-taxonomy label; there is no
fuzzy matching by design, so reports stay auditable.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

from .prompts import definition_blocks


class Category(Enum):
    REPRESENTATIONAL_TOOL = "representational_tool"
    METHODOLOGICAL_APPROACH = "methodological_approach"
    EPISTEMOLOGICAL_CATEGORY = "epistemological_category"
    META_CONCEPTUAL = "meta_conceptual"


class ComponentType(Enum):
    # Declaration order is the specificity order; ranks derive from it.
    TEMPLATE = "Template"
    CHECKLIST = "Checklist"
    SCORECARD = "Scorecard"
    MODEL = "Model"
    FORMAT = "Format"
    HEURISTIC = "Heuristic"
    SCIENTIFIC_HYPOTHESIS = "Scientific hypothesis"
    HYPOTHESIS = "Hypothesis"
    BEST_PRACTICE = "Best practice"
    PATTERN = "Pattern"
    TOOLKIT = "Toolkit"
    SCIENTIFIC_THEORY = "Scientific theory"
    THEORY = "Theory"
    FRAMEWORK = "Framework"
    PATTERN_LANGUAGE = "Pattern language"
    META_PATTERN = "Meta-pattern"
    PRINCIPLE = "Principle"
    PARADIGM = "Paradigm"

    @property
    def specificity_rank(self) -> int:
        return _RANKS[self]

    @property
    def category(self) -> Category:
        return _CATEGORIES[self]


_RANKS = {member: index + 1 for index, member in enumerate(ComponentType)}

_CATEGORIES = {
    ComponentType.TEMPLATE: Category.REPRESENTATIONAL_TOOL,
    ComponentType.CHECKLIST: Category.METHODOLOGICAL_APPROACH,
    ComponentType.SCORECARD: Category.REPRESENTATIONAL_TOOL,
    ComponentType.MODEL: Category.REPRESENTATIONAL_TOOL,
    ComponentType.FORMAT: Category.REPRESENTATIONAL_TOOL,
    ComponentType.HEURISTIC: Category.METHODOLOGICAL_APPROACH,
    ComponentType.SCIENTIFIC_HYPOTHESIS: Category.EPISTEMOLOGICAL_CATEGORY,
    ComponentType.HYPOTHESIS: Category.EPISTEMOLOGICAL_CATEGORY,
    ComponentType.BEST_PRACTICE: Category.EPISTEMOLOGICAL_CATEGORY,
    ComponentType.PATTERN: Category.EPISTEMOLOGICAL_CATEGORY,
    ComponentType.TOOLKIT: Category.METHODOLOGICAL_APPROACH,
    ComponentType.SCIENTIFIC_THEORY: Category.EPISTEMOLOGICAL_CATEGORY,
    ComponentType.THEORY: Category.EPISTEMOLOGICAL_CATEGORY,
    ComponentType.FRAMEWORK: Category.METHODOLOGICAL_APPROACH,
    ComponentType.PATTERN_LANGUAGE: Category.METHODOLOGICAL_APPROACH,
    ComponentType.META_PATTERN: Category.META_CONCEPTUAL,
    ComponentType.PRINCIPLE: Category.EPISTEMOLOGICAL_CATEGORY,
    ComponentType.PARADIGM: Category.EPISTEMOLOGICAL_CATEGORY,
}


def _fold(label: str) -> str:
    # Hyphens become spaces before folding so "meta-pattern" matches
    # "Meta pattern"; whitespace runs collapse; comparison is casefolded.
    cleaned = label.replace("-", " ")
    cleaned = re.sub(r"\s+", " ", cleaned).strip()
    return cleaned.casefold()


_CANONICAL_BY_FOLD = {_fold(member.value): member for member in ComponentType}


class ResolutionKind(Enum):
    CANONICAL = "canonical"
    OFF_TAXONOMY = "off-taxonomy"
    UNLABELLED = "unlabelled"
    NOT_APPLICABLE = "n-a"


@dataclass(frozen=True)
class TypeResolution:
    """Outcome of resolving a raw type label against the vocabulary.

    The raw label is always kept verbatim; resolution never rewrites it.
    component_type is set only for canonical outcomes.
    """

    kind: ResolutionKind
    raw_label: str
    component_type: ComponentType | None = None

    def encode(self) -> str:
        if self.kind is ResolutionKind.CANONICAL:
            assert self.component_type is not None
            return f"canonical:{self.component_type.value}"
        if self.kind is ResolutionKind.OFF_TAXONOMY:
            return f"off-taxonomy:{self.raw_label}"
        return self.kind.value


def resolve_label(raw: str) -> TypeResolution:
    """Resolve a raw type label to a vocabulary outcome.

    Total over arbitrary strings. Empty labels and the literal "concept"
    placeholder are Unlabelled; "N/A" (any casing) means the extractor
    declined to type the record; known names match tolerantly; everything
    else is off-taxonomy, verbatim.
    """
    folded = _fold(raw)
    if not folded or folded == "concept":
        return TypeResolution(ResolutionKind.UNLABELLED, raw)
    if folded == "n/a":
        return TypeResolution(ResolutionKind.NOT_APPLICABLE, raw)
    member = _CANONICAL_BY_FOLD.get(folded)
    if member is not None:
        return TypeResolution(ResolutionKind.CANONICAL, raw, member)
    return TypeResolution(ResolutionKind.OFF_TAXONOMY, raw)


def canonical_from_name(name: str) -> ComponentType:
    """Strict lookup for operator input (curation retype targets)."""
    member = _CANONICAL_BY_FOLD.get(_fold(name))
    if member is None:
        raise ValueError(f"not a vocabulary type: {name!r}")
    return member


def vocabulary_records() -> list[dict]:
    """The vocabulary as plain records: name, category, rank, definition."""
    blocks = definition_blocks()
    records = []
    for member in ComponentType:
        records.append(
            {
                "name": member.value,
                "category": member.category.value,
                "specificity_rank": member.specificity_rank,
                "definition": blocks[member.value],
            }
        )
    return records


def write_vocabulary(path: Path) -> None:
    """Write the vocabulary as NDJSON, one type per line, rank order."""
    lines = [
        json.dumps(record, ensure_ascii=False) for record in vocabulary_records()
    ]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
