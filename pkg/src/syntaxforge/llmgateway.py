"""Uniform chat-completion client: caching, retry, bounded-concurrency batching.

The cache is content-addressed on the canonical request bytes. With nonzero
temperature the backend samples, so the cache freezes one sample per request;
that is what makes dataset builds replayable. Backends are pluggable: an
OpenAI-compatible HTTP endpoint for real runs, a scriptable mock for tests.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Protocol, Sequence

import requests

logger = logging.getLogger(__name__)

API_KEY_ENV = "SYNTAXFORGE_API_KEY"
BASE_URL_ENV = "SYNTAXFORGE_BASE_URL"

DEFAULT_MAX_IN_FLIGHT = 4


class GatewayError(Exception):
    """Base class for gateway failures."""


class ParamError(GatewayError):
    """Request parameters outside their valid ranges."""


class TransportError(GatewayError):
    """Network-level failure (connection, timeout)."""


class RateLimitError(GatewayError):
    """Endpoint signalled rate limiting."""


class ProtocolError(GatewayError):
    """Endpoint answered with an unusable response."""


class RetriesExhaustedError(GatewayError):
    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


class FinishReason(Enum):
    STOP = "stop"
    LENGTH = "length"
    OTHER = "other"


@dataclass(frozen=True)
class GenerationParams:
    """Sampling parameters; top_k=None means unlimited."""

    temperature: float = 0.3
    top_p: float = 0.95
    top_k: int | None = 50
    max_tokens: int | None = None

    def validate(self) -> None:
        if self.temperature < 0:
            raise ParamError(f"temperature must be >= 0, got {self.temperature}")
        if not (0 < self.top_p <= 1):
            raise ParamError(f"top_p must be in (0, 1], got {self.top_p}")
        if self.top_k is not None and self.top_k < 1:
            raise ParamError(f"top_k must be a positive integer, got {self.top_k}")
        if self.max_tokens is not None and self.max_tokens < 1:
            raise ParamError(f"max_tokens must be positive, got {self.max_tokens}")


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[tuple[str, str], ...]
    params: GenerationParams = GenerationParams()

    def validate(self) -> None:
        if not self.model:
            raise ParamError("model must be non-empty")
        if not self.messages:
            raise ParamError("messages must be non-empty")
        self.params.validate()

    @property
    def text(self) -> str:
        """All message contents joined; what mock match patterns run against."""
        return "\n".join(content for _, content in self.messages)


@dataclass
class ChatResponse:
    content: str
    finish_reason: FinishReason = FinishReason.STOP
    usage: dict[str, int] | None = None
    cached: bool = False
    attempts: int = 0


def make_request(
    model: str,
    rendered_messages: Sequence[tuple[str, str]],
    params: GenerationParams = GenerationParams(),
) -> ChatRequest:
    return ChatRequest(model=model, messages=tuple(rendered_messages), params=params)


def canonical_request_json(request: ChatRequest) -> str:
    """Canonical serialization: sorted keys, normalized numbers, ASCII-only."""
    payload = {
        "model": request.model,
        "messages": [{"role": role, "content": content} for role, content in request.messages],
        "params": {
            "temperature": float(request.params.temperature),
            "top_p": float(request.params.top_p),
            "top_k": None if request.params.top_k is None else int(request.params.top_k),
            "max_tokens": None if request.params.max_tokens is None else int(request.params.max_tokens),
        },
    }
    return json.dumps(payload, sort_keys=True, separators=(",", ":"), ensure_ascii=True)


def cache_key(request: ChatRequest) -> str:
    """64-hex-character SHA-256 digest of the canonical request bytes."""
    return hashlib.sha256(canonical_request_json(request).encode("ascii")).hexdigest()


@dataclass
class BackendReply:
    content: str
    finish_reason: FinishReason = FinishReason.STOP
    usage: dict[str, int] | None = None


class Backend(Protocol):
    def send(self, request: ChatRequest) -> BackendReply: ...


class HttpBackend:
    """OpenAI-compatible chat-completions endpoint over HTTPS.

    top_k is transmitted only when send_top_k is set; common hosted APIs
    reject unknown parameters.
    """

    def __init__(
        self,
        base_url: str | None = None,
        api_key: str | None = None,
        completions_path: str = "/chat/completions",
        timeout: float = 120.0,
        send_top_k: bool = False,
        session: requests.Session | None = None,
    ):
        self.base_url = (base_url or os.environ.get(BASE_URL_ENV, "")).rstrip("/")
        if not self.base_url:
            raise GatewayError(
                f"no endpoint configured: pass base_url or set {BASE_URL_ENV}"
            )
        self.api_key = api_key if api_key is not None else os.environ.get(API_KEY_ENV)
        self.completions_path = completions_path
        self.timeout = timeout
        self.send_top_k = send_top_k
        self.session = session or requests.Session()

    @property
    def endpoint(self) -> str:
        return self.base_url + self.completions_path

    def send(self, request: ChatRequest) -> BackendReply:
        payload: dict = {
            "model": request.model,
            "messages": [{"role": role, "content": content} for role, content in request.messages],
            "temperature": request.params.temperature,
            "top_p": request.params.top_p,
        }
        if request.params.max_tokens is not None:
            payload["max_tokens"] = request.params.max_tokens
        if self.send_top_k and request.params.top_k is not None:
            payload["top_k"] = request.params.top_k
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            resp = self.session.post(self.endpoint, json=payload, headers=headers, timeout=self.timeout)
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise TransportError(f"request to {self.endpoint} failed: {exc}") from exc
        if resp.status_code == 429:
            raise RateLimitError(f"{self.endpoint} returned 429")
        if not (200 <= resp.status_code < 300):
            raise ProtocolError(f"{self.endpoint} returned {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
            choice = body["choices"][0]
            content = choice["message"]["content"]
            if not isinstance(content, str):
                raise TypeError("content is not a string")
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"malformed response body from {self.endpoint}: {exc}") from exc
        finish = choice.get("finish_reason")
        reason = {"stop": FinishReason.STOP, "length": FinishReason.LENGTH}.get(finish, FinishReason.OTHER)
        usage = body.get("usage")
        usage_counts = None
        if isinstance(usage, dict):
            usage_counts = {
                k: int(v)
                for k, v in usage.items()
                if k in ("prompt_tokens", "completion_tokens") and isinstance(v, (int, float))
            }
        return BackendReply(content=content, finish_reason=reason, usage=usage_counts)


_MOCK_ERRORS = {
    "rate_limit": RateLimitError,
    "transport": TransportError,
    "protocol": ProtocolError,
}


@dataclass
class _MockRule:
    matcher: Callable[[ChatRequest], bool]
    responses: list[dict]
    consumed: int = 0

    def next_response(self) -> dict:
        entry = self.responses[min(self.consumed, len(self.responses) - 1)]
        self.consumed += 1
        return entry


class MockBackend:
    """Scriptable offline backend for tests and replayable pipeline runs.

    Rules map a request (by digest, regex pattern, or substring set) to a
    response schedule; schedule entries are consumed in order and the last one
    repeats. Entries are either {"content": ...} or {"error": kind} with kind
    in {rate_limit, transport, protocol}. A `respond` callable bypasses rules.
    """

    def __init__(
        self,
        script: dict | None = None,
        respond: Callable[[ChatRequest], str] | None = None,
    ):
        self.respond = respond
        self.rules: list[_MockRule] = []
        self.default: dict | None = None
        self.call_count = 0
        self._lock = threading.Lock()
        if script:
            self._load_script(script)

    @classmethod
    def from_file(cls, path: str | Path) -> "MockBackend":
        return cls(script=json.loads(Path(path).read_text(encoding="utf-8")))

    def _load_script(self, script: dict) -> None:
        for rule in script.get("rules", []):
            match = rule.get("match", {})
            responses = rule.get("responses")
            if not responses:
                raise ValueError("mock rule without responses")
            self.rules.append(_MockRule(matcher=self._compile_matcher(match), responses=responses))
        self.default = script.get("default")

    @staticmethod
    def _compile_matcher(match: dict) -> Callable[[ChatRequest], bool]:
        if "digest" in match:
            digest = match["digest"]
            return lambda req: cache_key(req) == digest
        if "pattern" in match:
            pattern = re.compile(match["pattern"], re.DOTALL)
            return lambda req: pattern.search(req.text) is not None
        if "contains" in match:
            needle = match["contains"]
            return lambda req: needle in req.text
        if "contains_all" in match:
            needles = list(match["contains_all"])
            return lambda req: all(n in req.text for n in needles)
        raise ValueError(f"mock rule with unsupported match spec: {match}")

    def send(self, request: ChatRequest) -> BackendReply:
        with self._lock:
            self.call_count += 1
            if self.respond is not None:
                return BackendReply(content=self.respond(request))
            entry = None
            for rule in self.rules:
                if rule.matcher(request):
                    entry = rule.next_response()
                    break
            if entry is None:
                entry = self.default
            if entry is None:
                raise ProtocolError("mock backend: no rule matched and no default configured")
        if "error" in entry:
            kind = entry["error"]
            exc = _MOCK_ERRORS.get(kind)
            if exc is None:
                raise ValueError(f"mock script: unknown error kind '{kind}'")
            raise exc(f"scripted {kind} failure")
        return BackendReply(
            content=entry["content"],
            finish_reason=FinishReason(entry.get("finish_reason", "stop")),
        )


@dataclass(frozen=True)
class RetryPolicy:
    """Retries apply to transport and rate-limit failures only."""

    max_attempts: int = 3
    initial_backoff: float = 1.0

    def backoff(self, attempt: int) -> float:
        return self.initial_backoff * (2 ** (attempt - 1))


class Gateway:
    """Shared front door to a backend with response caching.

    Safe for concurrent callers: cache writes are write-temp-then-rename, and
    identical in-flight requests serialize on a per-key lock so a warm cache
    sees exactly one backend call per distinct request.
    """

    def __init__(
        self,
        backend: Backend,
        cache_dir: str | Path | None = None,
        retry: RetryPolicy = RetryPolicy(),
        sleep: Callable[[float], None] = time.sleep,
        max_in_flight: int = DEFAULT_MAX_IN_FLIGHT,
        endpoint_label: str = "backend",
    ):
        self.backend = backend
        self.cache_dir = Path(cache_dir) if cache_dir else None
        if self.cache_dir:
            self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.retry = retry
        self.sleep = sleep
        self.max_in_flight = max_in_flight
        self.endpoint_label = endpoint_label
        self._key_locks: dict[str, threading.Lock] = {}
        self._key_locks_guard = threading.Lock()

    def _lock_for(self, key: str) -> threading.Lock:
        with self._key_locks_guard:
            return self._key_locks.setdefault(key, threading.Lock())

    def _cache_path(self, key: str) -> Path | None:
        return self.cache_dir / f"{key}.json" if self.cache_dir else None

    def _read_cache(self, key: str) -> ChatResponse | None:
        path = self._cache_path(key)
        if path is None or not path.exists():
            return None
        stored = json.loads(path.read_text(encoding="utf-8"))
        resp = stored["response"]
        return ChatResponse(
            content=resp["content"],
            finish_reason=FinishReason(resp.get("finish_reason", "stop")),
            usage=resp.get("usage"),
            cached=True,
            attempts=0,
        )

    def _write_cache(self, key: str, request: ChatRequest, response: ChatResponse) -> None:
        path = self._cache_path(key)
        if path is None:
            return
        record = {
            "request": json.loads(canonical_request_json(request)),
            "response": {
                "content": response.content,
                "finish_reason": response.finish_reason.value,
                "usage": response.usage,
            },
            "timestamp": time.time(),
            "endpoint": self.endpoint_label,
        }
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(json.dumps(record, ensure_ascii=False, sort_keys=True), encoding="utf-8")
        tmp.replace(path)

    def complete(self, request: ChatRequest, refresh: bool = False) -> ChatResponse:
        """Answer a request, from cache when possible.

        refresh=True skips the cache read and overwrites the stored entry;
        retry loops use it to draw a fresh sample.
        """
        request.validate()
        key = cache_key(request)
        if not refresh:
            cached = self._read_cache(key)
            if cached is not None:
                return cached
        with self._lock_for(key):
            if not refresh:
                cached = self._read_cache(key)
                if cached is not None:
                    return cached
            reply, attempts = self._send_with_retry(request)
            response = ChatResponse(
                content=reply.content,
                finish_reason=reply.finish_reason,
                usage=reply.usage,
                cached=False,
                attempts=attempts,
            )
            self._write_cache(key, request, response)
            return response

    def _send_with_retry(self, request: ChatRequest) -> tuple[BackendReply, int]:
        attempt = 0
        while True:
            attempt += 1
            try:
                return self.backend.send(request), attempt
            except (TransportError, RateLimitError) as exc:
                if attempt >= self.retry.max_attempts:
                    raise RetriesExhaustedError(
                        f"{self.endpoint_label}: giving up after {attempt} attempts: {exc}",
                        attempts=attempt,
                    ) from exc
                delay = self.retry.backoff(attempt)
                logger.warning(
                    "%s attempt %d/%d failed (%s), retrying in %.1fs",
                    self.endpoint_label,
                    attempt,
                    self.retry.max_attempts,
                    exc,
                    delay,
                )
                self.sleep(delay)

    def batch_complete(
        self, requests_list: Sequence[ChatRequest], max_in_flight: int | None = None
    ) -> list[tuple[int, ChatResponse | GatewayError]]:
        """Complete every request; per-item failures never abort the batch.

        Returns (index, result) pairs in index order, where a result is a
        ChatResponse or the GatewayError that killed that item.
        """
        limit = max_in_flight if max_in_flight is not None else self.max_in_flight
        if limit < 1:
            raise ValueError("max_in_flight must be >= 1")
        if not requests_list:
            return []
        results: list[tuple[int, ChatResponse | GatewayError]] = [None] * len(requests_list)  # type: ignore[list-item]

        def run(i: int, req: ChatRequest) -> None:
            try:
                results[i] = (i, self.complete(req))
            except GatewayError as exc:
                results[i] = (i, exc)

        with ThreadPoolExecutor(max_workers=limit) as pool:
            for i, req in enumerate(requests_list):
                pool.submit(run, i, req)
        return results


def gateway_from_env(
    cache_dir: str | Path | None = None,
    mock_script: str | Path | None = None,
    **backend_kwargs,
) -> Gateway:
    """Build a gateway from a mock script file or the environment endpoint."""
    if mock_script is not None:
        backend: Backend = MockBackend.from_file(mock_script)
        label = f"mock:{mock_script}"
    else:
        http = HttpBackend(**backend_kwargs)
        backend = http
        label = http.endpoint
    return Gateway(backend, cache_dir=cache_dir, endpoint_label=label)
