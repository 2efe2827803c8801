"""File-backed store for documents, components, curation and reuse history.

Single-writer, multi-reader: every public method takes the repository lock,
and mutations persist the whole state atomically (write-then-rename) before
returning. The store is one JSON file; the interchange format for component
data is NDJSON via export/import, which round-trips byte-identically.

Identity is content-derived everywhere it matters: a component id hashes its
document, position and text, so re-running the same extraction on the same
corpus yields the same ids, and exports from replayed runs compare equal.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .extraction import ExtractionOutcome
from .ingest import DocumentRecord, DocumentStatus, DuplicateDocumentError
from .taxonomy import (
    ComponentType,
    ResolutionKind,
    TypeResolution,
    canonical_from_name,
    resolve_label,
)


class RepositoryError(Exception):
    pass


class UnknownDocumentError(RepositoryError):
    pass


class UnknownComponentError(RepositoryError):
    pass


class DuplicateExtractionError(RepositoryError):
    pass


class CurationError(RepositoryError):
    pass


class ImportValidationError(RepositoryError):
    pass


class CurationState(Enum):
    UNREVIEWED = "unreviewed"
    APPROVED = "approved"
    REJECTED = "rejected"
    RETYPED = "retyped"


def encode_curation(state: CurationState, retyped_to: ComponentType | None) -> str:
    if state is CurationState.RETYPED:
        assert retyped_to is not None
        return f"retyped:{retyped_to.value}"
    return state.value


def decode_curation(text: str) -> tuple[CurationState, ComponentType | None]:
    if text.startswith("retyped:"):
        return CurationState.RETYPED, canonical_from_name(text.split(":", 1)[1])
    return CurationState(text), None


@dataclass
class KnowledgeComponent:
    component_id: str
    doc_id: str
    source_span: int
    title: str
    raw_type_label: str
    resolution: TypeResolution
    description: str
    citation: str
    filename: str
    paper_title: str
    per_paper_concept_count: int
    curation_state: CurationState = CurationState.UNREVIEWED
    retyped_to: ComponentType | None = None
    created_at: str = ""

    def __post_init__(self) -> None:
        if (self.curation_state is CurationState.RETYPED) != (self.retyped_to is not None):
            raise ValueError(f"component {self.component_id}: retype state and target must agree")

    @property
    def effective_type(self) -> ComponentType | None:
        """Canonical type after curation overrides; None when off-vocabulary."""
        if self.curation_state is CurationState.RETYPED:
            return self.retyped_to
        return self.resolution.component_type


@dataclass(frozen=True)
class ReuseEvent:
    event_id: str
    component_id: str
    project: str
    note: str
    adopted: bool
    at: str


@dataclass(frozen=True)
class SprintRecord:
    sprint_id: str
    project: str
    component_ids: tuple[str, ...]
    triggered_at: str
    solution_at: str | None = None
    adopted: bool = False

    def __post_init__(self) -> None:
        if not 3 <= len(self.component_ids) <= 5:
            raise ValueError("a sprint takes 3 to 5 candidate components")
        if self.solution_at is not None and self.solution_at < self.triggered_at:
            raise ValueError("sprint solution cannot predate its trigger")
        if self.adopted and self.solution_at is None:
            raise ValueError("an adopted sprint must have a solution time")


def compute_component_id(doc_id: str, span: int, title: str, type_label: str, description: str) -> str:
    digest = hashlib.sha256(
        "\x1f".join([doc_id, str(span), title, type_label, description]).encode("utf-8")
    )
    return digest.hexdigest()[:16]


EXPORT_FIELDS = (
    "paper_id",
    "citation",
    "filename",
    "concept_count",
    "paper_title",
    "component_type",
    "description",
    "curation_state",
    "resolved_type",
)


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class Repository:
    def __init__(
        self,
        path: Path | str | None = None,
        clock: Callable[[], str] = _utcnow,
        autosave: bool = True,
    ):
        self.path = Path(path) if path is not None else None
        self.clock = clock
        self.autosave = autosave
        self._lock = threading.RLock()
        self._docs: dict[str, DocumentRecord] = {}
        self._components: list[KnowledgeComponent] = []
        self._by_id: dict[str, KnowledgeComponent] = {}
        self._na_docs: set[str] = set()
        self._extractions: set[tuple[str, str]] = set()
        self._raw_responses: dict[str, dict] = {}
        self._reuse: list[ReuseEvent] = []
        self._sprints: list[SprintRecord] = []
        self._audit: list[dict] = []
        self._jobs: dict[str, dict] = {}
        if self.path is not None and self.path.exists():
            self._load()

    # -- documents ---------------------------------------------------------

    def add_document(self, record: DocumentRecord) -> None:
        with self._lock:
            if record.doc_id in self._docs:
                raise DuplicateDocumentError(
                    f"document {record.doc_id} already stored ({record.filename!r})"
                )
            self._docs[record.doc_id] = record
            self._maybe_save()

    def add_documents(self, records: Iterable[DocumentRecord]) -> None:
        for record in records:
            self.add_document(record)

    def documents(self) -> list[DocumentRecord]:
        with self._lock:
            return list(self._docs.values())

    def get_document(self, doc_id: str) -> DocumentRecord:
        with self._lock:
            try:
                return self._docs[doc_id]
            except KeyError:
                raise UnknownDocumentError(f"no such document: {doc_id}") from None

    def extracted_documents(self) -> list[DocumentRecord]:
        with self._lock:
            return [d for d in self._docs.values() if d.status is DocumentStatus.EXTRACTED]

    def na_doc_ids(self) -> set[str]:
        with self._lock:
            return set(self._na_docs)

    def raw_response(self, doc_id: str) -> dict | None:
        with self._lock:
            record = self._raw_responses.get(doc_id)
            return dict(record) if record else None

    # -- extraction results ------------------------------------------------

    def insert_extraction(self, outcome: ExtractionOutcome, force: bool = False) -> list[KnowledgeComponent]:
        """Store one document's parsed components atomically.

        A second run of the same document under the same configuration is
        rejected unless forced. A document holds exactly one stored
        extraction: re-inserting (forced, or under a new configuration)
        replaces the previous components rather than appending to them, and
        the per-paper concept count is recomputed.
        """
        with self._lock:
            doc = self.get_document(outcome.doc_id)
            key = (outcome.doc_id, outcome.config_hash)
            if key in self._extractions and not force:
                raise DuplicateExtractionError(
                    f"document {outcome.doc_id} already extracted under config "
                    f"{outcome.config_hash} (use force to re-run)"
                )
            created = self.clock()
            rows = []
            for raw in outcome.components:
                component_id = compute_component_id(
                    doc.doc_id, raw.source_span, raw.title, raw.type_label, raw.description
                )
                existing = self._by_id.get(component_id)
                if existing is not None and existing.doc_id != doc.doc_id:
                    raise DuplicateExtractionError(
                        f"component {component_id} already stored for {existing.doc_id}"
                    )
                rows.append(
                    KnowledgeComponent(
                        component_id=component_id,
                        doc_id=doc.doc_id,
                        source_span=raw.source_span,
                        title=raw.title,
                        raw_type_label=raw.type_label,
                        resolution=resolve_label(raw.type_label),
                        description=raw.description,
                        citation=doc.citation,
                        filename=doc.filename,
                        paper_title=doc.title,
                        per_paper_concept_count=0,  # recomputed below
                        created_at=created,
                    )
                )
            self._drop_extraction(doc.doc_id)
            self._components.extend(rows)
            for row in rows:
                self._by_id[row.component_id] = row
            if outcome.none_found:
                self._na_docs.add(doc.doc_id)
            doc.status = DocumentStatus.EXTRACTED
            self._extractions.add(key)
            self._raw_responses[doc.doc_id] = {
                "request_hash": outcome.raw.request_hash,
                "text": outcome.raw.text,
                "provider_id": outcome.raw.provider_id,
                "captured_at": outcome.raw.captured_at,
                "config_hash": outcome.config_hash,
            }
            self._recount(doc.doc_id)
            self._maybe_save()
            return rows

    def _drop_extraction(self, doc_id: str) -> None:
        # Remove a document's stored extraction prior to replacement. Reuse
        # events and audit entries referencing dropped components are kept:
        # they are historical records, not views over current state.
        dropped = [c for c in self._components if c.doc_id == doc_id]
        self._components = [c for c in self._components if c.doc_id != doc_id]
        for c in dropped:
            self._by_id.pop(c.component_id, None)
        self._na_docs.discard(doc_id)
        self._raw_responses.pop(doc_id, None)
        self._extractions = {k for k in self._extractions if k[0] != doc_id}

    def _recount(self, doc_id: str) -> None:
        count = sum(1 for c in self._components if c.doc_id == doc_id)
        for c in self._components:
            if c.doc_id == doc_id:
                c.per_paper_concept_count = count

    # -- queries -----------------------------------------------------------

    def components(
        self,
        type_label: str | ComponentType | None = None,
        year: int | None = None,
        subject: str | None = None,
        state: CurationState | str | None = None,
    ) -> list[KnowledgeComponent]:
        """Conjunctive filter over stored components, in stable order.

        The type filter matches the effective canonical type (curation
        overrides apply); an off-vocabulary value matches raw labels
        case-insensitively instead.
        """
        with self._lock:
            wanted_state = CurationState(state) if isinstance(state, str) else state
            canonical: ComponentType | None = None
            raw_fold: str | None = None
            if isinstance(type_label, ComponentType):
                canonical = type_label
            elif type_label is not None:
                resolved = resolve_label(type_label)
                if resolved.kind is ResolutionKind.CANONICAL:
                    canonical = resolved.component_type
                else:
                    raw_fold = type_label.strip().casefold()
            out = []
            for c in sorted(self._components, key=lambda c: (c.doc_id, c.source_span)):
                if canonical is not None and c.effective_type is not canonical:
                    continue
                if raw_fold is not None and c.raw_type_label.strip().casefold() != raw_fold:
                    continue
                if wanted_state is not None and c.curation_state is not wanted_state:
                    continue
                if year is not None or subject is not None:
                    doc = self._docs.get(c.doc_id)
                    if year is not None and (doc is None or doc.year != year):
                        continue
                    if subject is not None and (doc is None or subject not in doc.subjects):
                        continue
                out.append(c)
            return out

    def get_component(self, component_id: str) -> KnowledgeComponent:
        with self._lock:
            try:
                return self._by_id[component_id]
            except KeyError:
                raise UnknownComponentError(f"no such component: {component_id}") from None

    def analytics_components(self, include_rejected: bool = False) -> list[KnowledgeComponent]:
        with self._lock:
            rows = sorted(self._components, key=lambda c: (c.doc_id, c.source_span))
            if include_rejected:
                return rows
            return [c for c in rows if c.curation_state is not CurationState.REJECTED]

    def document_map(self) -> dict[str, DocumentRecord]:
        with self._lock:
            return dict(self._docs)

    # -- curation ----------------------------------------------------------

    def set_curation(
        self,
        component_id: str,
        state: CurationState | str,
        retype_to: str | ComponentType | None = None,
        actor: str = "operator",
    ) -> KnowledgeComponent:
        with self._lock:
            component = self.get_component(component_id)
            new_state = CurationState(state) if isinstance(state, str) else state
            target: ComponentType | None = None
            if new_state is CurationState.RETYPED:
                if retype_to is None:
                    raise CurationError("retype needs a target type")
                if isinstance(retype_to, ComponentType):
                    target = retype_to
                else:
                    try:
                        target = canonical_from_name(retype_to)
                    except ValueError as exc:
                        raise CurationError(str(exc)) from None
                if component.resolution.component_type is target:
                    raise CurationError(
                        f"component already resolves to {target.value}; nothing to correct"
                    )
            elif retype_to is not None:
                raise CurationError("retype target is only valid with retyped state")
            old = encode_curation(component.curation_state, component.retyped_to)
            component.curation_state = new_state
            component.retyped_to = target
            new = encode_curation(new_state, target)
            self._audit.append(
                {
                    "seq": len(self._audit) + 1,
                    "component_id": component_id,
                    "actor": actor,
                    "at": self.clock(),
                    "from": old,
                    "to": new,
                }
            )
            self._maybe_save()
            return component

    def audit_entries(self, component_id: str | None = None) -> list[dict]:
        with self._lock:
            entries = [dict(e) for e in self._audit]
            if component_id is not None:
                entries = [e for e in entries if e["component_id"] == component_id]
            return entries

    # -- reuse -------------------------------------------------------------

    def record_reuse(
        self, component_id: str, project: str, note: str, adopted: bool = False, at: str | None = None
    ) -> ReuseEvent:
        with self._lock:
            component = self.get_component(component_id)
            if component.curation_state is CurationState.REJECTED:
                raise RepositoryError(
                    f"component {component_id} is rejected; reuse cannot be recorded against it"
                )
            if not project.strip():
                raise RepositoryError("reuse event needs a project name")
            event = ReuseEvent(
                event_id=f"ev-{len(self._reuse) + 1:04d}",
                component_id=component_id,
                project=project,
                note=note,
                adopted=adopted,
                at=at or self.clock(),
            )
            self._reuse.append(event)
            self._maybe_save()
            return event

    def reuse_events(self, component_id: str | None = None) -> list[ReuseEvent]:
        with self._lock:
            events = list(self._reuse)
            if component_id is not None:
                events = [e for e in events if e.component_id == component_id]
            return events

    def record_sprint(
        self,
        project: str,
        component_ids: Sequence[str],
        triggered_at: str,
        solution_at: str | None = None,
        adopted: bool = False,
    ) -> SprintRecord:
        with self._lock:
            for cid in component_ids:
                self.get_component(cid)
            sprint = SprintRecord(
                sprint_id=f"sp-{len(self._sprints) + 1:04d}",
                project=project,
                component_ids=tuple(component_ids),
                triggered_at=triggered_at,
                solution_at=solution_at,
                adopted=adopted,
            )
            self._sprints.append(sprint)
            self._maybe_save()
            return sprint

    def sprints(self) -> list[SprintRecord]:
        with self._lock:
            return list(self._sprints)

    # -- jobs ----------------------------------------------------------------

    def create_job(self, kind: str, job_id: str) -> dict:
        with self._lock:
            at = self.clock()
            job = {
                "job_id": job_id,
                "kind": kind,
                "state": "queued",
                "created_at": at,
                "progress": {"done": 0, "total": 0},
                "transitions": [["queued", at]],
                "error": None,
                "result": None,
            }
            self._jobs[job_id] = job
            self._maybe_save()
            return json.loads(json.dumps(job))

    def job_transition(self, job_id: str, state: str, error: str | None = None, result: dict | None = None) -> None:
        allowed = {"queued": {"running"}, "running": {"done", "failed"}}
        with self._lock:
            job = self._get_job(job_id)
            if state not in allowed.get(job["state"], set()):
                raise RepositoryError(f"job {job_id} cannot go {job['state']} -> {state}")
            job["state"] = state
            job["transitions"].append([state, self.clock()])
            if error is not None:
                job["error"] = error
            if result is not None:
                job["result"] = result
            self._maybe_save()

    def job_progress(self, job_id: str, done: int, total: int) -> None:
        with self._lock:
            job = self._get_job(job_id)
            job["progress"] = {"done": done, "total": total}
            self._maybe_save()

    def get_job(self, job_id: str) -> dict:
        with self._lock:
            return json.loads(json.dumps(self._get_job(job_id)))

    def _get_job(self, job_id: str) -> dict:
        try:
            return self._jobs[job_id]
        except KeyError:
            raise RepositoryError(f"no such job: {job_id}") from None

    # -- export / import -----------------------------------------------------

    def export_rows(self) -> list[dict]:
        with self._lock:
            rows = []
            for c in sorted(self._components, key=lambda c: (c.doc_id, c.source_span)):
                rows.append(
                    {
                        "paper_id": c.doc_id,
                        "citation": c.citation,
                        "filename": c.filename,
                        "concept_count": c.per_paper_concept_count,
                        "paper_title": c.paper_title,
                        "component_type": c.raw_type_label,
                        "description": c.description,
                        "curation_state": encode_curation(c.curation_state, c.retyped_to),
                        "resolved_type": c.resolution.encode(),
                    }
                )
            return rows

    def export_components(self, path: Path | str) -> int:
        rows = self.export_rows()
        lines = [json.dumps(row, ensure_ascii=False) for row in rows]
        Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        return len(rows)

    def import_components(self, path: Path | str) -> int:
        """Load an export file into an empty repository.

        Every row is re-validated: the raw type label must resolve to the
        recorded resolved_type, and per-paper counts must be consistent.
        Document records are reconstructed as stubs carrying what the export
        preserves (citation, filename, title).
        """
        with self._lock:
            if self._components:
                raise RepositoryError("import requires an empty repository")
            text = Path(path).read_text(encoding="utf-8")
            spans: dict[str, int] = {}
            created = self.clock()
            rows: list[KnowledgeComponent] = []
            stubs: dict[str, DocumentRecord] = {}
            for number, line in enumerate(text.splitlines(), 1):
                if not line.strip():
                    continue
                try:
                    data = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise ImportValidationError(f"{path}:{number}: invalid JSON ({exc.msg})") from None
                missing = [f for f in EXPORT_FIELDS if f not in data]
                if missing:
                    raise ImportValidationError(f"{path}:{number}: missing fields {missing}")
                resolution = resolve_label(data["component_type"])
                if resolution.encode() != data["resolved_type"]:
                    raise ImportValidationError(
                        f"{path}:{number}: label {data['component_type']!r} resolves to "
                        f"{resolution.encode()}, file says {data['resolved_type']}"
                    )
                try:
                    state, target = decode_curation(data["curation_state"])
                except ValueError as exc:
                    raise ImportValidationError(f"{path}:{number}: {exc}") from None
                doc_id = data["paper_id"]
                span = spans.get(doc_id, 0)
                spans[doc_id] = span + 1
                if doc_id not in self._docs and doc_id not in stubs:
                    stubs[doc_id] = DocumentRecord(
                        doc_id=doc_id,
                        filename=data["filename"],
                        title=data["paper_title"],
                        citation=data["citation"],
                        year=None,
                        subjects=(),
                        body_text="",
                        status=DocumentStatus.EXTRACTED,
                    )
                rows.append(
                    KnowledgeComponent(
                        component_id=compute_component_id(
                            doc_id, span, data["paper_title"], data["component_type"], data["description"]
                        ),
                        doc_id=doc_id,
                        source_span=span,
                        title=data["paper_title"],
                        raw_type_label=data["component_type"],
                        resolution=resolution,
                        description=data["description"],
                        citation=data["citation"],
                        filename=data["filename"],
                        paper_title=data["paper_title"],
                        per_paper_concept_count=int(data["concept_count"]),
                        curation_state=state,
                        retyped_to=target,
                        created_at=created,
                    )
                )
            counts: dict[str, int] = {}
            for row in rows:
                counts[row.doc_id] = counts.get(row.doc_id, 0) + 1
            for row in rows:
                if counts[row.doc_id] != row.per_paper_concept_count:
                    raise ImportValidationError(
                        f"document {row.doc_id}: file claims {row.per_paper_concept_count} "
                        f"components, {counts[row.doc_id]} present"
                    )
            # all rows validated; only now touch state, so a bad file leaves
            # the repository exactly as it was
            self._docs.update(stubs)
            self._components.extend(rows)
            for row in rows:
                self._by_id[row.component_id] = row
            self._maybe_save()
            return len(rows)

    # -- persistence ---------------------------------------------------------

    def save(self) -> None:
        if self.path is None:
            return
        with self._lock:
            state = self._to_state()
            tmp = self.path.with_name(self.path.name + ".tmp")
            tmp.write_text(json.dumps(state, ensure_ascii=False, indent=1), encoding="utf-8")
            tmp.replace(self.path)

    def _maybe_save(self) -> None:
        if self.autosave:
            self.save()

    def _to_state(self) -> dict:
        return {
            "version": 1,
            "documents": [
                {
                    "doc_id": d.doc_id,
                    "filename": d.filename,
                    "title": d.title,
                    "citation": d.citation,
                    "year": d.year,
                    "subjects": list(d.subjects),
                    "body_text": d.body_text,
                    "status": d.status.value,
                    "exclusion_reason": d.exclusion_reason,
                }
                for d in self._docs.values()
            ],
            "components": [
                {
                    "component_id": c.component_id,
                    "doc_id": c.doc_id,
                    "source_span": c.source_span,
                    "title": c.title,
                    "raw_type_label": c.raw_type_label,
                    "resolution_kind": c.resolution.kind.value,
                    "resolution_type": c.resolution.component_type.value
                    if c.resolution.component_type
                    else None,
                    "description": c.description,
                    "citation": c.citation,
                    "filename": c.filename,
                    "paper_title": c.paper_title,
                    "per_paper_concept_count": c.per_paper_concept_count,
                    "curation_state": c.curation_state.value,
                    "retyped_to": c.retyped_to.value if c.retyped_to else None,
                    "created_at": c.created_at,
                }
                for c in self._components
            ],
            "na_docs": sorted(self._na_docs),
            "extractions": sorted([list(pair) for pair in self._extractions]),
            "raw_responses": self._raw_responses,
            "reuse_events": [
                {
                    "event_id": e.event_id,
                    "component_id": e.component_id,
                    "project": e.project,
                    "note": e.note,
                    "adopted": e.adopted,
                    "at": e.at,
                }
                for e in self._reuse
            ],
            "sprints": [
                {
                    "sprint_id": s.sprint_id,
                    "project": s.project,
                    "component_ids": list(s.component_ids),
                    "triggered_at": s.triggered_at,
                    "solution_at": s.solution_at,
                    "adopted": s.adopted,
                }
                for s in self._sprints
            ],
            "audit": self._audit,
            "jobs": self._jobs,
        }

    def _load(self) -> None:
        state = json.loads(self.path.read_text(encoding="utf-8"))
        if state.get("version") != 1:
            raise RepositoryError(f"unsupported state version in {self.path}")
        for d in state["documents"]:
            self._docs[d["doc_id"]] = DocumentRecord(
                doc_id=d["doc_id"],
                filename=d["filename"],
                title=d["title"],
                citation=d["citation"],
                year=d["year"],
                subjects=tuple(d["subjects"]),
                body_text=d["body_text"],
                status=DocumentStatus(d["status"]),
                exclusion_reason=d["exclusion_reason"],
            )
        for c in state["components"]:
            resolution = TypeResolution(
                kind=ResolutionKind(c["resolution_kind"]),
                raw_label=c["raw_type_label"],
                component_type=ComponentType(c["resolution_type"]) if c["resolution_type"] else None,
            )
            row = KnowledgeComponent(
                component_id=c["component_id"],
                doc_id=c["doc_id"],
                source_span=c["source_span"],
                title=c["title"],
                raw_type_label=c["raw_type_label"],
                resolution=resolution,
                description=c["description"],
                citation=c["citation"],
                filename=c["filename"],
                paper_title=c["paper_title"],
                per_paper_concept_count=c["per_paper_concept_count"],
                curation_state=CurationState(c["curation_state"]),
                retyped_to=ComponentType(c["retyped_to"]) if c["retyped_to"] else None,
                created_at=c["created_at"],
            )
            self._components.append(row)
            self._by_id[row.component_id] = row
        self._na_docs = set(state["na_docs"])
        self._extractions = {tuple(pair) for pair in state["extractions"]}
        self._raw_responses = state["raw_responses"]
        self._reuse = [ReuseEvent(**e) for e in state["reuse_events"]]
        self._sprints = [
            SprintRecord(
                sprint_id=s["sprint_id"],
                project=s["project"],
                component_ids=tuple(s["component_ids"]),
                triggered_at=s["triggered_at"],
                solution_at=s["solution_at"],
                adopted=s["adopted"],
            )
            for s in state["sprints"]
        ]
        self._audit = state["audit"]
        self._jobs = state["jobs"]
