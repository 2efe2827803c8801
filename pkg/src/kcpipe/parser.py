"""Parser for the structured extraction responses.

The expected shape per record is three fields separated by blank lines:

    ****Title****

    ****Type label****

    Paragraph description (may span several paragraphs)

with records separated by a line of hyphens (----- or longer). Field markers
tolerate 2 to 4 asterisks per side, and the two sides need not match, because
providers are sloppy about emphasis. A corpus with nothing to report comes
back either as the bare sentinel line or as an N/A + N/A record carrying it.

This parser must be total: any byte soup yields a ParseResult, never an
exception. Records that cannot be read are reported as MalformedRecord
entries and logged; they are never silently dropped and never stored.
"""

from __future__ import annotations

import logging
import re
from dataclasses import dataclass, field

logger = logging.getLogger(__name__)

NONE_FOUND_SENTINEL = "No reusable concepts were identified in this document"

# A record separator is a whole line of three or more hyphens.
_SEPARATOR_RE = re.compile(r"^[ \t]*-{3,}[ \t]*$", re.MULTILINE)

# A field is a single line's worth of text wrapped in 2-4 asterisks per side.
_FIELD_RE = re.compile(r"\*{2,4}([^*\n]+?)\*{2,4}")


@dataclass(frozen=True)
class RawComponent:
    """One extracted record, text verbatim, prior to taxonomy resolution."""

    title: str
    type_label: str
    description: str
    source_span: int  # ordinal of the record within the response


@dataclass(frozen=True)
class MalformedRecord:
    source_span: int
    reason: str
    excerpt: str


@dataclass
class ParseResult:
    components: list[RawComponent] = field(default_factory=list)
    none_found: bool = False
    malformed: list[MalformedRecord] = field(default_factory=list)

    @property
    def failure(self) -> str | None:
        """Reason the response as a whole is unusable, else None.

        Zero components is only a valid outcome when the response explicitly
        said so via the sentinel; anything else unusable must surface as an
        error so the document stays pending.
        """
        if self.components or self.none_found:
            return None
        if not self.malformed:
            return "empty response"
        return "no parseable records"


def _is_na(text: str) -> bool:
    return text.strip().casefold() == "n/a"


def parse_response(text: str) -> ParseResult:
    """Parse a full response into components. Total: never raises."""
    result = ParseResult()
    chunks = [c for c in _SEPARATOR_RE.split(text) if c.strip()]
    span = 0
    for chunk in chunks:
        _parse_record(chunk, span, result)
        span += 1
    # The no-concepts marker only stands when it is the entire response.
    if result.components and result.none_found:
        result.none_found = False
        _note_malformed(result, -1, "stray no-concepts marker among records", "")
    return result


def _parse_record(chunk: str, span: int, result: ParseResult) -> None:
    stripped = chunk.strip()
    if stripped == NONE_FOUND_SENTINEL:
        result.none_found = True
        return
    fields = list(_FIELD_RE.finditer(chunk))
    if len(fields) < 2:
        reason = "missing type field" if fields else "no structured fields"
        _note_malformed(result, span, reason, stripped)
        return
    title = fields[0].group(1).strip()
    type_label = fields[1].group(1).strip()
    description = chunk[fields[1].end() :].strip()
    if _is_na(title) and _is_na(type_label):
        # Extractor reported nothing to find; the description, when present,
        # is the sentinel (or an apology to the same effect).
        result.none_found = True
        return
    if description == NONE_FOUND_SENTINEL:
        result.none_found = True
        return
    if not description:
        _note_malformed(result, span, "empty description", stripped)
        return
    result.components.append(RawComponent(title, type_label, description, span))


def _note_malformed(result: ParseResult, span: int, reason: str, excerpt: str) -> None:
    record = MalformedRecord(span, reason, excerpt[:120])
    result.malformed.append(record)
    logger.warning("malformed record %d: %s (%r)", span, reason, record.excerpt)


def serialize_component(component: RawComponent) -> str:
    _check_serializable(component)
    return f"****{component.title}****\n\n****{component.type_label}****\n\n{component.description}"


def serialize_components(components: list[RawComponent] | tuple[RawComponent, ...]) -> str:
    """Render components back into the response format.

    Inverse of parse_response for well-formed content; used to build replay
    fixtures and to round-trip repository records. An empty list serialises
    to the no-concepts marker record.
    """
    if not components:
        return serialize_none_found()
    return "\n\n-----\n\n".join(serialize_component(c) for c in components)


def serialize_none_found() -> str:
    return f"****N/A****\n\n****N/A****\n\n{NONE_FOUND_SENTINEL}"


def _check_serializable(component: RawComponent) -> None:
    for label, value in (("title", component.title), ("type label", component.type_label)):
        if "*" in value or "\n" in value:
            raise ValueError(f"{label} cannot be serialised: {value!r}")
        if not value.strip():
            raise ValueError(f"{label} is blank")
    if _SEPARATOR_RE.search(component.description):
        raise ValueError("description contains a record separator line")
    if not component.description.strip():
        raise ValueError("description is blank")
