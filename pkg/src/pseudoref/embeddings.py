"""Sentence-embedding providers (remote service, deterministic mock, cached-file
replay), a bit-exact vector cache, and cosine similarity.

Vector cache layout: ``<cache_dir>/embeddings/<provider>/<model>/<first 2
hex>/<key>.vec`` where key = SHA-256(provider_id NUL model_id NUL text).
Each file holds a 16-byte header (magic "PREFVEC1", u32 dim, u32 reserved)
followed by little-endian float64 values.
"""

from __future__ import annotations

import hashlib
import math
import os
import struct
import tempfile
from dataclasses import dataclass
from pathlib import Path

import requests

from .hashing import fnv1a64
from .llm import CACHE_DIR_ENV, DEFAULT_CACHE_DIR

_MAGIC = b"PREFVEC1"


class EmbeddingError(RuntimeError):
    pass


class DimMismatch(EmbeddingError):
    pass


class EmptyText(EmbeddingError):
    pass


class ProviderUnreachable(EmbeddingError):
    pass


class ZeroVector(EmbeddingError):
    pass


class ZeroNorm(EmbeddingError):
    pass


@dataclass(frozen=True)
class EmbeddingVector:
    values: tuple[float, ...]
    model_id: str

    def __post_init__(self):
        if not self.values:
            raise EmbeddingError("empty vector")
        if not all(math.isfinite(v) for v in self.values):
            raise EmbeddingError("vector contains non-finite entries")

    @property
    def dim(self) -> int:
        return len(self.values)

    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.values))


@dataclass(frozen=True)
class EmbeddingProviderSpec:
    provider_id: str  # remote | mock | file
    model_id: str
    endpoint_url: str | None = None
    expected_dim: int = 16
    batch_size: int = 32

    def __post_init__(self):
        if self.provider_id not in ("remote", "mock", "file"):
            raise ValueError(f"unknown provider {self.provider_id!r}")
        if self.expected_dim < 1:
            raise ValueError("expected_dim must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def mock_embed(text: str, dim: int = 16, model_id: str = "mock-fnv") -> EmbeddingVector:
    """Deterministic token-multiset hash embedding, L2-normalized.

    Lowercases, splits on whitespace, and scatters +/-1 per token into a
    bucket chosen by a 64-bit FNV-1a hash. Invariant under token order;
    identical across platforms.
    """
    if not text.strip():
        raise EmptyText("cannot embed empty text")
    acc = [0.0] * dim
    for token in text.lower().split():
        h = fnv1a64(token)
        sign = 1.0 if (h >> 32) & 1 == 0 else -1.0
        acc[h % dim] += sign
    norm = math.sqrt(sum(v * v for v in acc))
    if norm == 0.0:
        raise ZeroVector(f"all token contributions cancelled for {text!r}")
    return EmbeddingVector(tuple(v / norm for v in acc), model_id=model_id)


def cosine_similarity(a: EmbeddingVector, b: EmbeddingVector) -> float:
    """dot(a, b) / (|a| |b|), clamped to [-1, 1] against rounding overshoot."""
    if a.dim != b.dim:
        raise DimMismatch(f"dim {a.dim} vs {b.dim}")
    norm_a = a.norm()
    norm_b = b.norm()
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroNorm("cosine undefined for zero-norm vector")
    dot = sum(x * y for x, y in zip(a.values, b.values))
    return max(-1.0, min(1.0, dot / (norm_a * norm_b)))


def vector_key(provider_id: str, model_id: str, text: str) -> str:
    canonical = "\x00".join([provider_id, model_id, text])
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class VectorCache:
    """Bit-exact disk cache for embedding vectors."""

    def __init__(self, root: str | Path | None = None):
        if root is None:
            root = os.environ.get(CACHE_DIR_ENV, DEFAULT_CACHE_DIR)
        self.root = Path(root) / "embeddings"

    def _path(self, spec: EmbeddingProviderSpec, key: str) -> Path:
        return self.root / spec.provider_id / spec.model_id / key[:2] / f"{key}.vec"

    def get(self, spec: EmbeddingProviderSpec, key: str) -> EmbeddingVector | None:
        path = self._path(spec, key)
        try:
            blob = path.read_bytes()
        except FileNotFoundError:
            return None
        if blob[:8] != _MAGIC:
            raise EmbeddingError(f"corrupt vector file {path}")
        (dim, _reserved) = struct.unpack("<II", blob[8:16])
        values = struct.unpack(f"<{dim}d", blob[16 : 16 + 8 * dim])
        return EmbeddingVector(values, model_id=spec.model_id)

    def put(self, spec: EmbeddingProviderSpec, key: str, vec: EmbeddingVector) -> None:
        path = self._path(spec, key)
        path.parent.mkdir(parents=True, exist_ok=True)
        blob = _MAGIC + struct.pack("<II", vec.dim, 0) + struct.pack(f"<{vec.dim}d", *vec.values)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "wb") as fh:
                fh.write(blob)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise

    def stats(self) -> dict:
        count = 0
        size = 0
        if self.root.is_dir():
            for entry in self.root.rglob("*.vec"):
                count += 1
                size += entry.stat().st_size
        return {"entries": count, "bytes": size}


def _remote_embed(
    spec: EmbeddingProviderSpec, texts: list[str], session: requests.Session
) -> list[EmbeddingVector]:
    out: list[EmbeddingVector] = []
    for start in range(0, len(texts), spec.batch_size):
        chunk = texts[start : start + spec.batch_size]
        try:
            resp = session.post(
                spec.endpoint_url.rstrip("/") + "/embed", json={"texts": chunk}, timeout=120
            )
        except requests.RequestException as exc:
            raise ProviderUnreachable(str(exc)) from exc
        if resp.status_code != 200:
            raise ProviderUnreachable(f"HTTP {resp.status_code}: {resp.text[:200]}")
        payload = resp.json()
        vectors = payload["vectors"]
        if len(vectors) != len(chunk):
            raise EmbeddingError(f"provider returned {len(vectors)} vectors for {len(chunk)} texts")
        for raw in vectors:
            out.append(EmbeddingVector(tuple(float(v) for v in raw), model_id=spec.model_id))
    return out


def embed_batch(
    spec: EmbeddingProviderSpec,
    texts: list[str],
    cache: VectorCache | None = None,
    session: requests.Session | None = None,
) -> list[EmbeddingVector]:
    """Embed a batch of texts, order-preserving, cache-first.

    Every returned vector is checked against spec.expected_dim; a wrong
    provider dimension is a hard DimMismatch.
    """
    if not texts:
        raise EmptyText("empty batch")
    for text in texts:
        if not text.strip():
            raise EmptyText("cannot embed empty text")
    cache = cache or VectorCache()
    keys = [vector_key(spec.provider_id, spec.model_id, t) for t in texts]
    results: list[EmbeddingVector | None] = [cache.get(spec, k) for k in keys]
    missing = [i for i, vec in enumerate(results) if vec is None]
    if missing:
        if spec.provider_id == "mock":
            fresh = [mock_embed(texts[i], dim=spec.expected_dim, model_id=spec.model_id) for i in missing]
        elif spec.provider_id == "remote":
            if not spec.endpoint_url:
                raise ProviderUnreachable("remote provider requires endpoint_url")
            fresh = _remote_embed(spec, [texts[i] for i in missing], session or requests.Session())
        else:  # file provider replays from the cache only
            absent = [texts[i] for i in missing]
            raise ProviderUnreachable(
                f"file provider has no cached vector for {len(absent)} text(s), e.g. {absent[0]!r}"
            )
        for i, vec in zip(missing, fresh):
            if vec.dim != spec.expected_dim:
                raise DimMismatch(f"provider returned dim {vec.dim}, expected {spec.expected_dim}")
            cache.put(spec, keys[i], vec)
            results[i] = vec
    out: list[EmbeddingVector] = []
    for vec in results:
        assert vec is not None
        if vec.dim != spec.expected_dim:
            raise DimMismatch(f"cached vector has dim {vec.dim}, expected {spec.expected_dim}")
        out.append(vec)
    return out
