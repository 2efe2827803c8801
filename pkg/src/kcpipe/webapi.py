"""HTTP surface over the repository and reports.

Contract notes that matter to clients:

- Every request must carry X-Schema-Version: 1 (OPTIONS preflight excepted);
  anything else is a 400 before routing. Responses echo the header.
- When the server is started with a token, Authorization: Bearer <token> is
  required and failures are 401.
- Mutating endpoints accept an Idempotency-Key header. Replaying the same key
  with the same payload returns the recorded response without repeating the
  side effect; the same key with a different payload is a 409.
- Extraction runs as an in-process job: POST /extract returns a job id, and
  the job walks queued -> running -> done/failed with a persisted transition
  log and progress counts.

Reports returned here are exactly the structures the CLI prints with
--format structured, so the two surfaces can be diffed directly.
"""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass, field as dataclass_field
from pathlib import Path
from typing import Callable

from fastapi import FastAPI, HTTPException, Request
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import analytics
from .extraction import ExtractionConfig, extract_corpus
from .ingest import (
    DocumentRecord,
    DocumentStatus,
    DuplicateDocumentError,
    NO_TEXT_REASON,
    compute_doc_id,
    normalize_text,
)
from .providers import ChatProvider, LiveProvider, RecordingProvider, ReplayCache, ReplayProvider
from .repository import (
    CurationError,
    KnowledgeComponent,
    Repository,
    RepositoryError,
    UnknownComponentError,
    UnknownDocumentError,
    encode_curation,
)
from .taxonomy import vocabulary_records

SCHEMA_VERSION = "1"
SCHEMA_HEADER = "X-Schema-Version"


@dataclass
class ApiSettings:
    token: str | None = None
    replay_cache_dir: Path | str | None = None
    provider_factory: Callable[[str], ChatProvider] | None = None
    config: ExtractionConfig = dataclass_field(default_factory=ExtractionConfig)
    parallel: int = 1
    run_jobs_inline: bool = False  # synchronous jobs, for tests


class DocumentIn(BaseModel):
    filename: str
    title: str
    citation: str
    text: str
    year: int | None = None
    subjects: list[str] = []
    exclude_reason: str | None = None


class ExtractIn(BaseModel):
    provider: str = "replay"
    doc_ids: list[str] | None = None
    force: bool = False
    allow_truncated: bool = False
    parallel: int | None = None


class CurationIn(BaseModel):
    curation_state: str
    retype_to: str | None = None
    actor: str = "api"


class ReuseIn(BaseModel):
    project: str
    note: str
    adopted: bool = False


def _document_dict(doc: DocumentRecord, with_body: bool = False) -> dict:
    out = {
        "doc_id": doc.doc_id,
        "filename": doc.filename,
        "title": doc.title,
        "citation": doc.citation,
        "year": doc.year,
        "subjects": list(doc.subjects),
        "status": doc.status.value,
        "exclusion_reason": doc.exclusion_reason,
    }
    if with_body:
        out["body_text"] = doc.body_text
    return out


def _component_dict(c: KnowledgeComponent, doc: DocumentRecord | None) -> dict:
    return {
        "component_id": c.component_id,
        "doc_id": c.doc_id,
        "source_span": c.source_span,
        "title": c.title,
        "type_label": c.raw_type_label,
        "resolved_type": c.resolution.encode(),
        "effective_type": c.effective_type.value if c.effective_type else None,
        "description": c.description,
        "citation": c.citation,
        "filename": c.filename,
        "paper_title": c.paper_title,
        "per_paper_concept_count": c.per_paper_concept_count,
        "curation_state": encode_curation(c.curation_state, c.retyped_to),
        "created_at": c.created_at,
        "year": doc.year if doc else None,
        "subjects": list(doc.subjects) if doc else [],
    }


def create_app(repo: Repository, settings: ApiSettings | None = None) -> FastAPI:
    settings = settings or ApiSettings()
    app = FastAPI(title="kcpipe", version="0.1.0")
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    idempotency_lock = threading.Lock()
    idempotency_seen: dict[str, dict] = {}

    @app.middleware("http")
    async def schema_and_auth(request: Request, call_next):
        if request.method != "OPTIONS":
            if request.headers.get(SCHEMA_HEADER) != SCHEMA_VERSION:
                return JSONResponse(
                    {"detail": f"{SCHEMA_HEADER}: {SCHEMA_VERSION} header required"},
                    status_code=400,
                    headers={SCHEMA_HEADER: SCHEMA_VERSION},
                )
            if settings.token is not None:
                if request.headers.get("Authorization") != f"Bearer {settings.token}":
                    return JSONResponse(
                        {"detail": "missing or invalid bearer token"},
                        status_code=401,
                        headers={SCHEMA_HEADER: SCHEMA_VERSION},
                    )
        response = await call_next(request)
        response.headers[SCHEMA_HEADER] = SCHEMA_VERSION
        return response

    @app.exception_handler(RequestValidationError)
    async def invalid_payload(request: Request, exc: RequestValidationError):
        return JSONResponse(
            {"detail": jsonable_encoder(exc.errors())},
            status_code=400,
            headers={SCHEMA_HEADER: SCHEMA_VERSION},
        )

    def idempotent(request: Request, payload: dict, produce: Callable[[], tuple[int, dict]]):
        key = request.headers.get("Idempotency-Key")
        fingerprint = json.dumps(
            {"path": request.url.path, "payload": payload}, sort_keys=True, ensure_ascii=False
        )
        if key is not None:
            with idempotency_lock:
                entry = idempotency_seen.get(key)
            if entry is not None:
                if entry["fingerprint"] != fingerprint:
                    raise HTTPException(409, "idempotency key replayed with a different payload")
                return JSONResponse(entry["body"], status_code=entry["status"])
        status, body = produce()
        if key is not None and 200 <= status < 300:
            with idempotency_lock:
                idempotency_seen[key] = {"fingerprint": fingerprint, "status": status, "body": body}
        return JSONResponse(body, status_code=status)

    def resolve_provider(name: str) -> ChatProvider:
        if settings.provider_factory is not None:
            return settings.provider_factory(name)
        if name == "replay":
            if settings.replay_cache_dir is None:
                raise HTTPException(400, "no replay cache configured on this server")
            return ReplayProvider(ReplayCache(settings.replay_cache_dir))
        if name == "live":
            if settings.replay_cache_dir is None:
                return LiveProvider()
            return RecordingProvider(LiveProvider(), ReplayCache(settings.replay_cache_dir))
        raise HTTPException(400, f"unknown provider {name!r}")

    # -- documents -----------------------------------------------------------

    @app.get("/documents")
    def list_documents():
        return {"documents": [_document_dict(d) for d in repo.documents()]}

    @app.post("/documents", status_code=201)
    def add_document(body: DocumentIn, request: Request):
        def produce() -> tuple[int, dict]:
            text = normalize_text(body.text)
            status = DocumentStatus.PENDING
            reason = body.exclude_reason
            if reason is not None:
                status = DocumentStatus.EXCLUDED
            elif not text:
                status, reason = DocumentStatus.EXCLUDED, NO_TEXT_REASON
            record = DocumentRecord(
                doc_id=compute_doc_id(body.filename, text),
                filename=body.filename,
                title=body.title,
                citation=body.citation,
                year=body.year,
                subjects=tuple(body.subjects),
                body_text=text,
                status=status,
                exclusion_reason=reason,
            )
            try:
                repo.add_document(record)
            except DuplicateDocumentError as exc:
                raise HTTPException(409, str(exc)) from None
            return 201, {"document": _document_dict(record)}

        return idempotent(request, body.model_dump(), produce)

    @app.get("/documents/{doc_id}")
    def get_document(doc_id: str):
        return {"document": _document_dict(repo.get_document(doc_id), with_body=True)}

    @app.get("/documents/{doc_id}/response")
    def get_document_response(doc_id: str):
        repo.get_document(doc_id)  # 404 on unknown id
        record = repo.raw_response(doc_id)
        if record is None:
            raise HTTPException(404, f"document {doc_id} has no stored response")
        return {"response": record}

    # -- extraction jobs -----------------------------------------------------

    def run_extraction_job(job_id: str, body: ExtractIn) -> None:
        try:
            repo.job_transition(job_id, "running")
            provider = resolve_provider(body.provider)
            targets = body.doc_ids
            total = len(targets) if targets is not None else len(repo.documents())
            repo.job_progress(job_id, 0, total)
            report = extract_corpus(
                repo,
                provider,
                settings.config,
                doc_ids=targets,
                parallel=body.parallel or settings.parallel,
                force=body.force,
                allow_truncated=body.allow_truncated,
            )
            repo.job_progress(job_id, len(report.reports), total)
            result = {
                "extracted": len(report.succeeded),
                "failed": len(report.failed),
                "missing_cache_keys": report.missing_cache_keys,
                "documents": [
                    {
                        "doc_id": r.doc_id,
                        "outcome": r.outcome,
                        "detail": r.detail,
                        "components": r.component_count,
                        "malformed": r.malformed_count,
                    }
                    for r in report.reports
                ],
            }
            if report.failed:
                repo.job_transition(
                    job_id, "failed", error=f"{len(report.failed)} document(s) failed", result=result
                )
            else:
                repo.job_transition(job_id, "done", result=result)
        except Exception as exc:  # job must always land in a terminal state
            repo.job_transition(job_id, "failed", error=str(exc))

    @app.post("/extract", status_code=202)
    def start_extraction(body: ExtractIn, request: Request):
        def produce() -> tuple[int, dict]:
            if body.provider not in ("replay", "live") and settings.provider_factory is None:
                raise HTTPException(400, f"unknown provider {body.provider!r}")
            job = repo.create_job("extract", str(uuid.uuid4()))
            if settings.run_jobs_inline:
                run_extraction_job(job["job_id"], body)
            else:
                worker = threading.Thread(
                    target=run_extraction_job, args=(job["job_id"], body), daemon=True
                )
                worker.start()
            return 202, {"job": repo.get_job(job["job_id"])}

        return idempotent(request, body.model_dump(), produce)

    @app.get("/jobs/{job_id}")
    def get_job(job_id: str):
        try:
            return {"job": repo.get_job(job_id)}
        except RepositoryError as exc:
            raise HTTPException(404, str(exc)) from None

    # -- components ----------------------------------------------------------

    @app.get("/components")
    def list_components(
        type: str | None = None,
        year: int | None = None,
        subject: str | None = None,
        state: str | None = None,
    ):
        try:
            rows = repo.components(type_label=type, year=year, subject=subject, state=state)
        except ValueError as exc:
            raise HTTPException(400, f"bad state filter: {exc}") from None
        docs = repo.document_map()
        return {"components": [_component_dict(c, docs.get(c.doc_id)) for c in rows]}

    @app.get("/components/{component_id}")
    def get_component(component_id: str):
        c = repo.get_component(component_id)
        doc = repo.document_map().get(c.doc_id)
        events = [
            {
                "event_id": e.event_id,
                "project": e.project,
                "note": e.note,
                "adopted": e.adopted,
                "at": e.at,
            }
            for e in repo.reuse_events(component_id)
        ]
        return {"component": _component_dict(c, doc), "reuse_events": events}

    @app.patch("/components/{component_id}")
    def curate_component(component_id: str, body: CurationIn, request: Request):
        def produce() -> tuple[int, dict]:
            try:
                c = repo.set_curation(
                    component_id, body.curation_state, retype_to=body.retype_to, actor=body.actor
                )
            except ValueError as exc:
                raise HTTPException(400, f"bad curation state: {exc}") from None
            doc = repo.document_map().get(c.doc_id)
            return 200, {"component": _component_dict(c, doc)}

        payload = body.model_dump()
        payload["component_id"] = component_id
        return idempotent(request, payload, produce)

    @app.post("/components/{component_id}/reuse", status_code=201)
    def add_reuse(component_id: str, body: ReuseIn, request: Request):
        def produce() -> tuple[int, dict]:
            event = repo.record_reuse(component_id, body.project, body.note, adopted=body.adopted)
            return 201, {
                "event": {
                    "event_id": event.event_id,
                    "component_id": event.component_id,
                    "project": event.project,
                    "note": event.note,
                    "adopted": event.adopted,
                    "at": event.at,
                }
            }

        payload = body.model_dump()
        payload["component_id"] = component_id
        return idempotent(request, payload, produce)

    # -- reports and vocabulary ------------------------------------------------

    @app.get("/reports/type-frequency")
    def report_type_frequency(denominator: str = "labelled", include_rejected: bool = False):
        return analytics.type_frequency(
            repo, denominator=denominator, include_rejected=include_rejected
        ).to_dict()

    @app.get("/reports/per-paper")
    def report_per_paper(include_rejected: bool = False):
        return analytics.per_paper_stats(repo, include_rejected=include_rejected).to_dict()

    @app.get("/reports/crosstab")
    def report_crosstab():
        return analytics.crosstab(repo).to_dict()

    @app.get("/reports/sustainability")
    def report_sustainability():
        return analytics.sustainability_view(repo).to_dict()

    @app.get("/reports/reuse-metrics")
    def report_reuse_metrics(projects: str | None = None):
        universe = [p.strip() for p in projects.split(",") if p.strip()] if projects else None
        return analytics.reuse_metrics(repo, universe).to_dict()

    @app.get("/taxonomy")
    def get_taxonomy():
        return {"types": vocabulary_records()}

    @app.exception_handler(UnknownComponentError)
    async def unknown_component(request: Request, exc: UnknownComponentError):
        return _error(404, exc)

    @app.exception_handler(UnknownDocumentError)
    async def unknown_document(request: Request, exc: UnknownDocumentError):
        return _error(404, exc)

    @app.exception_handler(CurationError)
    async def curation_error(request: Request, exc: CurationError):
        return _error(400, exc)

    @app.exception_handler(RepositoryError)
    async def repository_error(request: Request, exc: RepositoryError):
        return _error(400, exc)

    @app.exception_handler(analytics.AnalyticsError)
    async def analytics_error(request: Request, exc: analytics.AnalyticsError):
        return _error(400, exc)

    def _error(status: int, exc: Exception) -> JSONResponse:
        return JSONResponse(
            {"detail": str(exc)}, status_code=status, headers={SCHEMA_HEADER: SCHEMA_VERSION}
        )

    return app
