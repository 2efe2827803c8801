"""Corpus ingestion: documents in, normalised records out.

A document is a file (plain text, markdown, or PDF) plus operator-supplied
metadata (title, citation, year, subject tags). Body text is whitespace
normalised but otherwise untouched; document identity is a content hash of
filename and body, so re-ingesting the same corpus is idempotent.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from . import pdftext

NO_TEXT_REASON = "no extractable text"


class IngestError(Exception):
    pass


class DuplicateDocumentError(IngestError):
    pass


class DocumentStatus(Enum):
    PENDING = "pending"
    EXTRACTED = "extracted"
    EXCLUDED = "excluded"


@dataclass
class DocumentRecord:
    doc_id: str
    filename: str
    title: str
    citation: str
    year: int | None
    subjects: tuple[str, ...]
    body_text: str
    status: DocumentStatus = DocumentStatus.PENDING
    exclusion_reason: str | None = None

    def __post_init__(self) -> None:
        # Exclusion and reason travel together, in both directions.
        if (self.status is DocumentStatus.EXCLUDED) != (self.exclusion_reason is not None):
            raise ValueError(
                f"document {self.doc_id or self.filename}: excluded status and "
                "exclusion reason must be set together"
            )


@dataclass(frozen=True)
class DocumentMetadata:
    filename: str
    title: str
    citation: str
    year: int | None = None
    subjects: tuple[str, ...] = ()
    exclude_reason: str | None = None

    @classmethod
    def from_dict(cls, data: dict) -> DocumentMetadata:
        try:
            filename = data["filename"]
            title = data["title"]
            citation = data["citation"]
        except KeyError as exc:
            raise IngestError(f"metadata row missing {exc.args[0]!r}: {data}") from None
        year = data.get("year")
        if year is not None and not isinstance(year, int):
            raise IngestError(f"metadata year must be an integer: {data}")
        subjects = tuple(str(s) for s in data.get("subjects", []))
        return cls(filename, title, citation, year, subjects, data.get("exclude_reason"))


def normalize_text(raw: str) -> str:
    """Collapse whitespace runs; keep paragraph breaks as single blank lines."""
    paragraphs = re.split(r"\n\s*\n", raw)
    collapsed = [" ".join(p.split()) for p in paragraphs]
    return "\n\n".join(p for p in collapsed if p)


def compute_doc_id(filename: str, body_text: str) -> str:
    digest = hashlib.sha256(f"{filename}\n{body_text}".encode("utf-8"))
    return digest.hexdigest()[:16]


def read_document_text(path: Path) -> str:
    if path.suffix.lower() == ".pdf":
        return pdftext.extract_text(path)
    return path.read_text(encoding="utf-8", errors="replace")


def load_document(path: Path, meta: DocumentMetadata) -> DocumentRecord:
    """Build a DocumentRecord from a file on disk plus its metadata.

    Documents with no recoverable text are kept but Excluded, so the corpus
    manifest still accounts for them. An operator exclusion in the metadata
    (retracted paper, editorial, duplicate) wins over text inspection.
    """
    try:
        body = normalize_text(read_document_text(path))
    except FileNotFoundError:
        raise IngestError(f"document file missing: {path}") from None
    except ValueError as exc:
        raise IngestError(str(exc)) from None

    status = DocumentStatus.PENDING
    reason = None
    if meta.exclude_reason is not None:
        status, reason = DocumentStatus.EXCLUDED, meta.exclude_reason
    elif not body:
        status, reason = DocumentStatus.EXCLUDED, NO_TEXT_REASON
    return DocumentRecord(
        doc_id=compute_doc_id(meta.filename, body),
        filename=meta.filename,
        title=meta.title,
        citation=meta.citation,
        year=meta.year,
        subjects=meta.subjects,
        body_text=body,
        status=status,
        exclusion_reason=reason,
    )


@dataclass(frozen=True)
class CorpusManifest:
    records: tuple[DocumentRecord, ...]
    subject_vocabulary: tuple[str, ...]
    year_range: tuple[int, int] | None

    @property
    def pending(self) -> int:
        return sum(1 for r in self.records if r.status is DocumentStatus.PENDING)

    @property
    def excluded(self) -> int:
        return sum(1 for r in self.records if r.status is DocumentStatus.EXCLUDED)


def build_manifest(records: list[DocumentRecord]) -> CorpusManifest:
    seen: dict[str, str] = {}
    for record in records:
        if record.doc_id in seen:
            raise DuplicateDocumentError(
                f"duplicate document {record.doc_id}: "
                f"{seen[record.doc_id]!r} and {record.filename!r}"
            )
        seen[record.doc_id] = record.filename
    subjects = sorted({s for r in records for s in r.subjects})
    years = [r.year for r in records if r.year is not None]
    year_range = (min(years), max(years)) if years else None
    return CorpusManifest(tuple(records), tuple(subjects), year_range)


def read_metadata(path: Path) -> list[DocumentMetadata]:
    """Read an NDJSON metadata file, one document per line."""
    rows = []
    for number, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            data = json.loads(line)
        except json.JSONDecodeError as exc:
            raise IngestError(f"{path}:{number}: invalid JSON ({exc.msg})") from None
        rows.append(DocumentMetadata.from_dict(data))
    return rows


def ingest_directory(directory: Path, metadata_path: Path) -> CorpusManifest:
    metadata = read_metadata(metadata_path)
    records = [load_document(directory / meta.filename, meta) for meta in metadata]
    return build_manifest(records)


def manifest_row(record: DocumentRecord) -> dict:
    return {
        "doc_id": record.doc_id,
        "filename": record.filename,
        "title": record.title,
        "citation": record.citation,
        "year": record.year,
        "subjects": list(record.subjects),
        "status": record.status.value,
    }


def write_manifest(records: list[DocumentRecord] | tuple[DocumentRecord, ...], path: Path) -> None:
    lines = [json.dumps(manifest_row(r), ensure_ascii=False) for r in records]
    path.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
