"""Embedding providers and query-embedding construction.

Three providers share one interface: an HTTP client for any service
speaking the common ``/v1/embeddings`` shape, a deterministic hashing
provider for offline runs and tests, and a null provider that rejects
everything (config-validation runs). The optional HyDE transform embeds
a generated hypothetical passage in place of the raw question.
"""
from __future__ import annotations

import hashlib
import logging
import math
import os
import threading
import time

import httpx
import numpy as np

logger = logging.getLogger(__name__)

DEFAULT_HYDE_TEMPLATE = (
    "Write a short factual passage that answers the following question."
    "\n\nQuestion: {q}\n\nPassage:"
)

MODE_DIRECT = "direct"
MODE_HYDE = "hyde"
EMBEDDING_MODES = (MODE_DIRECT, MODE_HYDE)


class EmbeddingError(RuntimeError):
    def __init__(self, message: str, retryable: bool = False):
        super().__init__(message)
        self.retryable = retryable


class HashEmbeddingProvider:
    """Deterministic test provider: hash whitespace tokens into d buckets,
    scale counts sublinearly, L2-normalize. Cheap, platform-stable, and
    similarity-meaningful (shared vocabulary raises cosine)."""

    def __init__(self, dim: int = 64):
        if dim < 1:
            raise ValueError("embedding.test_dim must be positive")
        self.dim = dim

    def dimension_hint(self) -> int:
        return self.dim

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        out = []
        for text in texts:
            counts = np.zeros(self.dim)
            for token in text.lower().split():
                digest = hashlib.sha1(token.encode("utf-8")).digest()
                bucket = int.from_bytes(digest[:4], "little") % self.dim
                counts[bucket] += 1.0
            vec = np.log1p(counts)
            norm = float(np.linalg.norm(vec))
            out.append(vec / norm if norm > 0.0 else vec)
        return out


class NullEmbeddingProvider:
    """Rejects every call; stands in where embeddings must never happen."""

    def dimension_hint(self) -> int:
        return 1

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        raise EmbeddingError("null embedding provider rejects all calls")


class HttpEmbeddingProvider:
    """Client for the common POST {base}/v1/embeddings request shape."""

    def __init__(self, base_url: str, model: str, api_key_env: str | None = None,
                 timeout_ms: int = 60_000, batch_size: int = 64,
                 max_in_flight: int = 4):
        if not base_url:
            raise ValueError("embedding.base_url is required for the http provider")
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.batch_size = batch_size
        self._limiter = threading.Semaphore(max_in_flight)
        self._client = httpx.Client(timeout=timeout_ms / 1000.0)

    def dimension_hint(self) -> int | None:
        return None  # unknown until the first response

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env, "")
            if key:
                headers["Authorization"] = f"Bearer {key}"
        return headers

    def _post_batch(self, batch: list[str]) -> list[np.ndarray]:
        payload = {"model": self.model, "input": batch}
        try:
            with self._limiter:
                resp = self._client.post(f"{self.base_url}/v1/embeddings",
                                         json=payload, headers=self._headers())
        except httpx.HTTPError as exc:
            raise EmbeddingError(f"embedding endpoint unreachable: {exc}",
                                 retryable=True) from exc
        if resp.status_code != 200:
            raise EmbeddingError(
                f"embedding endpoint returned {resp.status_code}: {resp.text[:200]}",
                retryable=resp.status_code >= 500)
        data = sorted(resp.json()["data"], key=lambda d: d["index"])
        return [np.asarray(d["embedding"], dtype=np.float64) for d in data]

    def embed(self, texts: list[str]) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for start in range(0, len(texts), self.batch_size):
            out.extend(self._post_batch(texts[start:start + self.batch_size]))
        return out


EmbeddingProvider = HashEmbeddingProvider | NullEmbeddingProvider | HttpEmbeddingProvider


def embed_texts(provider: EmbeddingProvider, texts: list[str],
                retries: int = 2) -> list[np.ndarray]:
    """Embed a batch, order-preserving, with dimension consistency checks.

    Empty inputs are rejected before dispatch; retryable provider errors
    are retried with backoff, dimension mismatches are fatal.
    """
    if not texts:
        raise ValueError("embed_texts: empty batch")
    for i, text in enumerate(texts):
        if not text:
            raise ValueError(f"embed_texts: text {i} is empty")
    attempt = 0
    while True:
        try:
            vectors = provider.embed(texts)
            break
        except EmbeddingError as exc:
            if not exc.retryable or attempt >= retries:
                raise
            attempt += 1
            time.sleep(min(0.25 * 2 ** attempt, 2.0))
    if len(vectors) != len(texts):
        raise EmbeddingError(
            f"provider returned {len(vectors)} vectors for {len(texts)} texts")
    dim = len(vectors[0])
    for vec in vectors[1:]:
        if len(vec) != dim:
            raise EmbeddingError("dimension mismatch within a batch")
    return [np.asarray(v, dtype=np.float64) for v in vectors]


def hyde_expand(question: str, generator,
                template: str = DEFAULT_HYDE_TEMPLATE) -> str:
    """Ask the generator (a ``prompt -> completion`` callable) for a
    hypothetical passage answering the question.

    Generator failures propagate; query_embedding handles the fall back
    to direct mode.
    """
    if not question:
        raise ValueError("hyde_expand: empty question")
    passage = generator(template.format(q=question))
    if not passage or not passage.strip():
        raise EmbeddingError("hyde generator returned an empty passage")
    return passage


def query_embedding(question: str, mode: str, provider: EmbeddingProvider,
                    generator=None, hyde_template: str = DEFAULT_HYDE_TEMPLATE,
                    ) -> tuple[np.ndarray, str | None, list[str]]:
    """Build the query vector for retrieval.

    Returns (vector, hyde passage or None, warnings). In hyde mode the
    generated passage is embedded instead of the question; on generator
    failure the direct embedding is used and a warning recorded.
    """
    if mode not in EMBEDDING_MODES:
        raise ValueError(f"unknown embedding mode {mode!r}")
    warnings: list[str] = []
    if mode == MODE_HYDE:
        try:
            if generator is None:
                raise EmbeddingError("hyde mode requires a generator")
            passage = hyde_expand(question, generator, hyde_template)
            return embed_texts(provider, [passage])[0], passage, warnings
        except Exception as exc:  # any generator trouble falls back to direct
            logger.warning("hyde expansion failed (%s); using direct embedding", exc)
            warnings.append(f"hyde_fallback: {exc}")
    return embed_texts(provider, [question])[0], None, warnings
