"""Extraction pipeline: document -> request -> response -> parsed components.

The request envelope is frozen to exactly one system and one user message;
the user message is the instruction prompt, a fixed joiner, then the full
document body. Truncated responses are never parsed into stored components
unless the caller explicitly overrides, because a cut-off record list looks
exactly like a short one.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import TYPE_CHECKING, Callable, Sequence

from .ingest import DocumentRecord, DocumentStatus
from .parser import ParseResult, RawComponent, parse_response
from .prompts import PAPER_CONTENT_JOINER, SYSTEM_PROMPT, USER_PROMPT
from .providers import ChatProvider, ProviderError, ReplayMissError, payload_key

if TYPE_CHECKING:
    from .repository import Repository

logger = logging.getLogger(__name__)


class ExtractionError(Exception):
    pass


class ConfigError(ExtractionError):
    pass


class TruncatedResponseError(ExtractionError):
    def __init__(self, doc_id: str):
        super().__init__(
            f"response for {doc_id} was cut off at the token cap; "
            "refusing to store a partial record list (pass allow_truncated to override)"
        )
        self.doc_id = doc_id


class ParseFailureError(ExtractionError):
    def __init__(self, doc_id: str, reason: str):
        super().__init__(f"response for {doc_id} unusable: {reason}")
        self.doc_id = doc_id
        self.reason = reason


@dataclass(frozen=True)
class ExtractionConfig:
    model_id: str = "gpt-4o"
    temperature: float = 0.2
    max_output_tokens: int = 3000
    system_prompt: str = SYSTEM_PROMPT
    user_prompt: str = USER_PROMPT

    def validate(self) -> None:
        if not self.model_id:
            raise ConfigError("model_id must be set")
        if not 0.0 <= self.temperature <= 2.0:
            raise ConfigError(f"temperature out of range: {self.temperature}")
        if self.max_output_tokens < 1:
            raise ConfigError(f"max_output_tokens must be positive: {self.max_output_tokens}")
        if not self.system_prompt or not self.user_prompt:
            raise ConfigError("prompts must be non-empty")

    @property
    def config_hash(self) -> str:
        payload = {
            "model_id": self.model_id,
            "temperature": self.temperature,
            "max_output_tokens": self.max_output_tokens,
            "system_prompt": self.system_prompt,
            "user_prompt": self.user_prompt,
        }
        return payload_key(payload)[:16]


@dataclass(frozen=True)
class RequestEnvelope:
    doc_id: str
    model_id: str
    temperature: float
    max_output_tokens: int
    messages: tuple[tuple[str, str], ...]  # (role, content), system then user

    def wire_payload(self) -> dict:
        return {
            "model": self.model_id,
            "messages": [{"role": role, "content": content} for role, content in self.messages],
            "temperature": self.temperature,
            "max_tokens": self.max_output_tokens,
        }

    @property
    def request_hash(self) -> str:
        return payload_key(self.wire_payload())


def build_request(doc: DocumentRecord, cfg: ExtractionConfig) -> RequestEnvelope:
    cfg.validate()
    if doc.status is DocumentStatus.EXCLUDED:
        raise ExtractionError(f"document {doc.doc_id} is excluded: {doc.exclusion_reason}")
    if not doc.body_text:
        raise ExtractionError(f"document {doc.doc_id} has no body text")
    user_content = f"{cfg.user_prompt}{PAPER_CONTENT_JOINER}{doc.body_text}"
    return RequestEnvelope(
        doc_id=doc.doc_id,
        model_id=cfg.model_id,
        temperature=cfg.temperature,
        max_output_tokens=cfg.max_output_tokens,
        messages=(("system", cfg.system_prompt), ("user", user_content)),
    )


class FinishState(Enum):
    COMPLETE = "complete"
    TRUNCATED = "truncated_by_token_cap"
    PROVIDER_ERROR = "provider_error"


@dataclass(frozen=True)
class RawResponse:
    doc_id: str
    request_hash: str
    text: str
    finish_state: FinishState
    provider_id: str
    captured_at: str
    error_detail: str | None = None


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


def dispatch(
    envelope: RequestEnvelope,
    provider: ChatProvider,
    clock: Callable[[], str] = _utcnow,
) -> RawResponse:
    """Send one envelope; always yields a RawResponse except on replay miss.

    A replay miss propagates: it means the operator asked for an offline run
    against a cache that does not cover the corpus, which is a setup error,
    not a response.
    """
    payload = envelope.wire_payload()
    try:
        reply = provider.complete(payload)
    except ReplayMissError:
        raise
    except ProviderError as exc:
        return RawResponse(
            doc_id=envelope.doc_id,
            request_hash=envelope.request_hash,
            text="",
            finish_state=FinishState.PROVIDER_ERROR,
            provider_id="",
            captured_at=clock(),
            error_detail=str(exc),
        )
    finish = FinishState.TRUNCATED if reply.stop_reason == "length" else FinishState.COMPLETE
    return RawResponse(
        doc_id=envelope.doc_id,
        request_hash=envelope.request_hash,
        text=reply.text,
        finish_state=finish,
        provider_id=reply.provider_id,
        captured_at=reply.captured_at or clock(),
    )


@dataclass(frozen=True)
class ExtractionOutcome:
    doc_id: str
    config_hash: str
    raw: RawResponse
    components: tuple[RawComponent, ...]
    none_found: bool
    malformed_count: int


def extract_document(
    doc: DocumentRecord,
    provider: ChatProvider,
    cfg: ExtractionConfig,
    allow_truncated: bool = False,
    clock: Callable[[], str] = _utcnow,
) -> ExtractionOutcome:
    """Run one document through the provider and parse the response.

    On success the record is marked Extracted. Any failure (provider error,
    truncation without override, unusable response) raises and leaves the
    document as it was, so a later run picks it up again.
    """
    envelope = build_request(doc, cfg)
    raw = dispatch(envelope, provider, clock)
    if raw.finish_state is FinishState.PROVIDER_ERROR:
        raise ExtractionError(f"provider failed for {doc.doc_id}: {raw.error_detail}")
    if raw.finish_state is FinishState.TRUNCATED and not allow_truncated:
        raise TruncatedResponseError(doc.doc_id)
    result: ParseResult = parse_response(raw.text)
    if result.failure:
        raise ParseFailureError(doc.doc_id, result.failure)
    if result.malformed:
        logger.warning(
            "document %s: %d malformed record(s) skipped", doc.doc_id, len(result.malformed)
        )
    doc.status = DocumentStatus.EXTRACTED
    return ExtractionOutcome(
        doc_id=doc.doc_id,
        config_hash=cfg.config_hash,
        raw=raw,
        components=tuple(result.components),
        none_found=result.none_found,
        malformed_count=len(result.malformed),
    )


@dataclass(frozen=True)
class DocReport:
    doc_id: str
    outcome: str  # "ok", "none-found", "skipped", "failed"
    detail: str = ""
    component_count: int = 0
    malformed_count: int = 0


@dataclass
class BatchReport:
    reports: list[DocReport] = field(default_factory=list)
    missing_cache_keys: list[str] = field(default_factory=list)

    @property
    def failed(self) -> list[DocReport]:
        return [r for r in self.reports if r.outcome == "failed"]

    @property
    def succeeded(self) -> list[DocReport]:
        return [r for r in self.reports if r.outcome in ("ok", "none-found")]


def extract_corpus(
    repo: Repository,
    provider: ChatProvider,
    cfg: ExtractionConfig,
    doc_ids: Sequence[str] | None = None,
    parallel: int = 1,
    force: bool = False,
    allow_truncated: bool = False,
) -> BatchReport:
    """Extract every pending document (or an explicit subset).

    Failures never abort the batch; each document reports its own outcome.
    Results are committed in corpus order regardless of worker scheduling,
    so parallel runs store exactly what a serial run would.
    """
    cfg.validate()
    docs = _select_documents(repo, doc_ids, force)
    report = BatchReport()

    def run_one(doc: DocumentRecord) -> ExtractionOutcome:
        return extract_document(doc, provider, cfg, allow_truncated=allow_truncated)

    runnable = [doc for doc, skip in docs if skip is None]
    futures = {}
    pool = ThreadPoolExecutor(max_workers=parallel) if parallel > 1 and len(runnable) > 1 else None
    if pool is not None:
        futures = {doc.doc_id: pool.submit(run_one, doc) for doc in runnable}
    try:
        for doc, skip_reason in docs:
            if skip_reason is not None:
                report.reports.append(DocReport(doc.doc_id, "skipped", skip_reason))
                continue
            try:
                outcome = futures[doc.doc_id].result() if futures else run_one(doc)
            except ReplayMissError as exc:
                report.missing_cache_keys.append(exc.key)
                report.reports.append(DocReport(doc.doc_id, "failed", f"replay miss: {exc.key}"))
                continue
            except ExtractionError as exc:
                report.reports.append(DocReport(doc.doc_id, "failed", str(exc)))
                continue
            repo.insert_extraction(outcome, force=force)
            label = "none-found" if outcome.none_found else "ok"
            report.reports.append(
                DocReport(doc.doc_id, label, "", len(outcome.components), outcome.malformed_count)
            )
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    return report


def _select_documents(
    repo: Repository, doc_ids: Sequence[str] | None, force: bool
) -> list[tuple[DocumentRecord, str | None]]:
    if doc_ids is None:
        chosen = repo.documents()
    else:
        chosen = [repo.get_document(d) for d in doc_ids]
    out: list[tuple[DocumentRecord, str | None]] = []
    for doc in chosen:
        if doc.status is DocumentStatus.EXCLUDED:
            out.append((doc, f"excluded: {doc.exclusion_reason}"))
        elif doc.status is DocumentStatus.EXTRACTED and not force:
            out.append((doc, "already extracted"))
        else:
            out.append((doc, None))
    return out
