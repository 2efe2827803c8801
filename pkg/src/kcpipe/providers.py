"""Chat-completion providers: live HTTP, replay-from-cache, and recording.

Every provider consumes the same wire payload dict ({model, messages,
temperature, max_tokens}) and returns a ProviderReply. The replay cache is
content addressed: the key is the SHA-256 of the canonical JSON payload, so
identical document + configuration always hits the same record and a cached
corpus replays deterministically, offline, forever. Cache records are
append-only; a second write under an existing key is a no-op.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Callable, Protocol

import httpx

logger = logging.getLogger(__name__)

DEFAULT_BASE_URL = "https://api.openai.com/v1"
API_KEY_ENV = "KCPIPE_API_KEY"


class ProviderError(Exception):
    """Transport or provider-side failure, after any retries."""


class ReplayMissError(ProviderError):
    def __init__(self, key: str, cache_dir: Path):
        super().__init__(f"no cached response for request {key} in {cache_dir}")
        self.key = key
        self.cache_dir = cache_dir


@dataclass(frozen=True)
class ProviderReply:
    text: str
    stop_reason: str  # "stop", "length", or provider-specific
    provider_id: str
    captured_at: str | None = None


class ChatProvider(Protocol):
    def complete(self, payload: dict) -> ProviderReply: ...


def canonical_payload(payload: dict) -> str:
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def payload_key(payload: dict) -> str:
    return hashlib.sha256(canonical_payload(payload).encode("utf-8")).hexdigest()


def _utcnow() -> str:
    return datetime.now(timezone.utc).isoformat()


class LiveProvider:
    """Calls a chat-completions endpoint over HTTPS.

    Transport failures and throttling (timeouts, connection errors, 429, 5xx)
    are retried up to max_attempts with exponential backoff. Anything the
    provider rejects outright (bad request, auth) is not retried; retrying a
    request the provider understood and refused only burns quota.
    """

    def __init__(
        self,
        api_key: str | None = None,
        base_url: str = DEFAULT_BASE_URL,
        timeout: float = 120.0,
        max_attempts: int = 3,
        backoff_seconds: float = 1.0,
        post: Callable[..., httpx.Response] | None = None,
        sleep: Callable[[float], None] = time.sleep,
    ):
        if api_key is None:
            api_key = os.environ.get(API_KEY_ENV) or os.environ.get("OPENAI_API_KEY", "")
        self.api_key = api_key
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self.max_attempts = max_attempts
        self.backoff_seconds = backoff_seconds
        self._post = post if post is not None else httpx.post
        self._sleep = sleep

    def complete(self, payload: dict) -> ProviderReply:
        url = f"{self.base_url}/chat/completions"
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_error = "no attempt made"
        for attempt in range(1, self.max_attempts + 1):
            try:
                response = self._post(url, headers=headers, json=payload, timeout=self.timeout)
            except httpx.HTTPError as exc:
                last_error = f"transport error: {exc}"
            else:
                if response.status_code == 200:
                    return self._parse(response)
                if response.status_code not in (429,) and response.status_code < 500:
                    raise ProviderError(
                        f"provider rejected request ({response.status_code}): {response.text[:200]}"
                    )
                last_error = f"status {response.status_code}"
            if attempt < self.max_attempts:
                delay = self.backoff_seconds * (2 ** (attempt - 1))
                logger.warning("attempt %d failed (%s); retrying in %.1fs", attempt, last_error, delay)
                self._sleep(delay)
        raise ProviderError(f"gave up after {self.max_attempts} attempts: {last_error}")

    def _parse(self, response: httpx.Response) -> ProviderReply:
        try:
            body = response.json()
            choice = body["choices"][0]
            text = choice["message"]["content"]
            stop_reason = choice.get("finish_reason") or "stop"
        except (ValueError, LookupError, TypeError) as exc:
            raise ProviderError(f"malformed provider response: {exc}") from None
        return ProviderReply(text=text, stop_reason=stop_reason, provider_id="live")


class ReplayCache:
    """Append-only store of request/response pairs, one JSON file per key."""

    def __init__(self, root: Path | str):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def key_for(self, payload: dict) -> str:
        return payload_key(payload)

    def path_for(self, key: str) -> Path:
        return self.root / f"{key}.json"

    def get(self, key: str) -> dict | None:
        path = self.path_for(key)
        if not path.exists():
            return None
        return json.loads(path.read_text(encoding="utf-8"))

    def put(self, payload: dict, reply: ProviderReply, captured_at: str | None = None) -> str:
        key = self.key_for(payload)
        path = self.path_for(key)
        if path.exists():
            return key  # content addressed: same key means same request
        record = {
            "key": key,
            "request": payload,
            "response": {
                "text": reply.text,
                "stop_reason": reply.stop_reason,
                "provider_id": reply.provider_id,
                "captured_at": captured_at or reply.captured_at or _utcnow(),
            },
        }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(record, ensure_ascii=False, indent=2), encoding="utf-8")
        tmp.replace(path)
        return key


class ReplayProvider:
    """Serves completions from the cache only; a miss is an error."""

    def __init__(self, cache: ReplayCache):
        self.cache = cache

    def complete(self, payload: dict) -> ProviderReply:
        key = self.cache.key_for(payload)
        record = self.cache.get(key)
        if record is None:
            raise ReplayMissError(key, self.cache.root)
        response = record["response"]
        return ProviderReply(
            text=response["text"],
            stop_reason=response["stop_reason"],
            provider_id=response.get("provider_id", "replay"),
            captured_at=response.get("captured_at"),
        )


class RecordingProvider:
    """Wraps a provider and persists every reply before returning it."""

    def __init__(self, inner: ChatProvider, cache: ReplayCache):
        self.inner = inner
        self.cache = cache

    def complete(self, payload: dict) -> ProviderReply:
        reply = self.inner.complete(payload)
        captured = reply.captured_at or _utcnow()
        self.cache.put(payload, reply, captured)
        return ProviderReply(reply.text, reply.stop_reason, reply.provider_id, captured)
