"""Text-generation backends: remote chat-completion client, deterministic mock,
retry with exponential backoff, and a content-addressed disk cache.

Cache entries are one JSON file per key under
``<cache_dir>/completions/<first 2 hex>/<key>.json``, written via
temp-file-then-atomic-rename so concurrent writers cannot corrupt entries.
"""

from __future__ import annotations

import hashlib
import json
import os
import random
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

import requests

from .hashing import fnv1a64
from .prompts import RenderedPrompt

CACHE_DIR_ENV = "PSEUDOREF_CACHE_DIR"
API_KEY_ENV = "PSEUDOREF_API_KEY"

DEFAULT_CACHE_DIR = Path("cache")


class LlmError(RuntimeError):
    pass


class Timeout(LlmError):
    pass


class HttpStatus(LlmError):
    def __init__(self, code: int, message: str = ""):
        super().__init__(f"HTTP {code}" + (f": {message}" if message else ""))
        self.code = code


class RetriesExhausted(LlmError):
    pass


class BackendRefusal(LlmError):
    pass


class InjectedFailure(LlmError):
    """Deterministic failure from the mock backend's failure-injection rule."""


@dataclass(frozen=True)
class BackendSpec:
    backend_id: str
    model_id: str
    endpoint_url: str | None = None
    temperature: float = 0.0
    max_output_tokens: int = 256
    timeout: float = 60.0
    max_retries: int = 2
    failure_rate: float = 0.0  # mock backend only

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_output_tokens < 1:
            raise ValueError("max_output_tokens must be >= 1")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")
        if not 0.0 <= self.failure_rate <= 1.0:
            raise ValueError("failure_rate must lie in [0, 1]")


@dataclass(frozen=True)
class CompletionResult:
    text: str
    finish_reason: str  # stop | length | error
    latency: float
    cached: bool


def _decimal(value: float | int) -> str:
    f = float(value)
    return str(int(f)) if f == int(f) else repr(f)


def cache_key(spec: BackendSpec, prompt: RenderedPrompt) -> str:
    """SHA-256 over the canonical identity of a completion request."""
    canonical = "\x00".join(
        [
            spec.backend_id,
            spec.model_id,
            _decimal(spec.temperature),
            _decimal(spec.max_output_tokens),
            prompt.text,
        ]
    )
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class CompletionCache:
    """Content-addressed disk cache for completion results."""

    def __init__(self, root: str | Path | None = None):
        if root is None:
            root = os.environ.get(CACHE_DIR_ENV, DEFAULT_CACHE_DIR)
        self.root = Path(root) / "completions"

    def _path(self, key: str) -> Path:
        return self.root / key[:2] / f"{key}.json"

    def get(self, key: str) -> str | None:
        path = self._path(key)
        try:
            payload = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None
        return payload["text"]

    def put(self, key: str, text: str) -> None:
        path = self._path(key)
        path.parent.mkdir(parents=True, exist_ok=True)
        payload = json.dumps({"key": key, "text": text}, ensure_ascii=False)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(payload)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def stats(self) -> dict:
        count = 0
        size = 0
        if self.root.is_dir():
            for entry in self.root.rglob("*.json"):
                count += 1
                size += entry.stat().st_size
        return {"entries": count, "bytes": size}


class Backend(Protocol):
    calls: int

    def generate(self, spec: BackendSpec, prompt: RenderedPrompt, request_id: str | None = None) -> str: ...


def mock_response(prompt_text: str, lexicon: dict[str, str] | None = None) -> str:
    """Deterministic stand-in for a generation backend.

    Scoring-shaped prompts (ending "Score (0-100):") get a stable integer
    in [0, 100]. Generation-shaped prompts get the lexicon translation of
    the text after the last "Sentence: " marker, or that text reversed
    word-by-word with a "MOCK: " prefix when the lexicon has no entry.
    """
    if prompt_text.rstrip().endswith("Score (0-100):"):
        return str(fnv1a64(prompt_text) % 101)
    body = prompt_text
    if body.endswith("\nTranslation:"):
        body = body[: -len("\nTranslation:")]
    marker = "Sentence: "
    idx = body.rfind(marker)
    extracted = body[idx + len(marker):] if idx >= 0 else body
    if lexicon and extracted in lexicon:
        return lexicon[extracted]
    return "MOCK: " + " ".join(reversed(extracted.split()))


def injected_failure(segment_id: str, rate: float) -> bool:
    """Reproducible failure set: fail iff fnv1a64(id) mod 1e6 < rate * 1e6."""
    if rate <= 0:
        return False
    return fnv1a64(segment_id) % 1_000_000 < rate * 1_000_000


class MockBackend:
    """Offline deterministic backend; optional reproducible failure injection."""

    def __init__(self, lexicon: dict[str, str] | None = None):
        self.lexicon = dict(lexicon or {})
        self.calls = 0

    def generate(self, spec: BackendSpec, prompt: RenderedPrompt, request_id: str | None = None) -> str:
        self.calls += 1
        if request_id is not None and injected_failure(request_id, spec.failure_rate):
            raise InjectedFailure(f"injected failure for {request_id!r}")
        return mock_response(prompt.text, self.lexicon)


class OpenAICompatibleBackend:
    """Client for a POST /v1/chat/completions endpoint."""

    def __init__(self, session: requests.Session | None = None):
        self.session = session or requests.Session()
        self.calls = 0

    def generate(self, spec: BackendSpec, prompt: RenderedPrompt, request_id: str | None = None) -> str:
        if not spec.endpoint_url:
            raise LlmError("remote backend requires endpoint_url")
        self.calls += 1
        headers = {}
        api_key = os.environ.get(API_KEY_ENV)
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        body = {
            "model": spec.model_id,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": spec.temperature,
            "max_tokens": spec.max_output_tokens,
        }
        try:
            resp = self.session.post(
                spec.endpoint_url.rstrip("/") + "/v1/chat/completions",
                json=body,
                headers=headers,
                timeout=spec.timeout,
            )
        except requests.Timeout as exc:
            raise Timeout(str(exc)) from exc
        except requests.RequestException as exc:
            raise LlmError(str(exc)) from exc
        if resp.status_code != 200:
            raise HttpStatus(resp.status_code, resp.text[:200])
        try:
            payload = resp.json()
            return payload["choices"][0]["message"]["content"] or ""
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise LlmError(f"malformed completion response: {exc}") from exc


def _retryable(exc: LlmError) -> bool:
    if isinstance(exc, InjectedFailure):
        return False
    if isinstance(exc, HttpStatus):
        return exc.code == 429 or exc.code >= 500
    return isinstance(exc, (Timeout, BackendRefusal)) or type(exc) is LlmError


def complete(
    spec: BackendSpec,
    prompt: RenderedPrompt,
    backend: Backend,
    cache: CompletionCache,
    request_id: str | None = None,
    sleeper: Callable[[float], None] = time.sleep,
    rng: random.Random | None = None,
) -> CompletionResult:
    """Run one completion through the cache, retrying transient failures.

    Backoff is exponential (base 1s, factor 2) with full jitter. A
    successful result is written to the cache before returning; cached
    results are served without touching the backend.
    """
    key = cache_key(spec, prompt)
    cached_text = cache.get(key)
    if cached_text is not None:
        return CompletionResult(text=cached_text, finish_reason="stop", latency=0.0, cached=True)
    rng = rng or random.Random()
    start = time.monotonic()
    last_exc: LlmError | None = None
    for attempt in range(spec.max_retries + 1):
        if attempt > 0:
            sleeper(rng.uniform(0.0, 1.0 * 2 ** (attempt - 1)))
        try:
            text = backend.generate(spec, prompt, request_id)
        except LlmError as exc:
            last_exc = exc
            if not _retryable(exc):
                raise
            continue
        if not text.strip():
            last_exc = BackendRefusal("backend returned an empty body")
            continue
        cache.put(key, text)
        return CompletionResult(
            text=text, finish_reason="stop", latency=time.monotonic() - start, cached=False
        )
    if isinstance(last_exc, BackendRefusal):
        raise last_exc
    raise RetriesExhausted(f"gave up after {spec.max_retries + 1} attempts: {last_exc}")
