"""Ephemeral in-memory vector store.

One session per QA instance: create, ingest embedded chunks, run exact
cosine search, destroy. Destruction is total and idempotent, so no
evidence can leak between instances. Search is a brute-force scan; at
per-instance corpus sizes this is faster than maintaining an external
index and keeps results exact.
"""
from __future__ import annotations

import logging
import threading
import time
import uuid
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .corpus import Chunk

logger = logging.getLogger(__name__)

STATE_OPEN = "open"
STATE_SEALED = "sealed"
STATE_DESTROYED = "destroyed"


class IndexError_(ValueError):
    """Base for store misuse errors (name avoids shadowing the builtin)."""


class SessionDestroyed(IndexError_):
    pass


class SessionSealed(IndexError_):
    pass


class SessionNotFound(KeyError):
    pass


class DimensionMismatch(IndexError_):
    pass


class DuplicateChunkId(IndexError_):
    pass


def cosine(u, v) -> float:
    """Cosine similarity; zero vectors score 0 with a warning."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise DimensionMismatch(f"cosine: {u.shape} vs {v.shape}")
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        logger.warning("cosine of a zero vector defined as 0")
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


@dataclass(frozen=True)
class EmbeddedChunk:
    chunk: Chunk
    vector: np.ndarray


@dataclass(frozen=True)
class ScoredChunk:
    chunk: Chunk
    vector: np.ndarray
    score: float


@dataclass
class Session:
    """A transient store; one writer or many concurrent readers."""

    id: str
    dimension: int
    created_at: float = field(default_factory=time.time)
    state: str = STATE_OPEN

    def __post_init__(self):
        self._entries: list[EmbeddedChunk] = []
        self._ids: set[str] = set()
        self._matrix: np.ndarray | None = None
        self._lock = threading.Lock()
        self._sink = None  # set by SessionManager; receives lifecycle events
        self.last_used = self.created_at

    def _emit(self, event: str, **payload):
        if self._sink is not None:
            self._sink({"event": event, "session_id": self.id, **payload})

    def _check_alive(self):
        if self.state == STATE_DESTROYED:
            raise SessionDestroyed(f"session {self.id} is destroyed")

    def __len__(self) -> int:
        return len(self._entries)

    def ingest(self, items: list[EmbeddedChunk]) -> int:
        self._check_alive()
        if self.state == STATE_SEALED:
            raise SessionSealed(f"session {self.id} is sealed")
        with self._lock:
            count = 0
            for item in items:
                vec = np.asarray(item.vector, dtype=np.float64)
                if vec.shape != (self.dimension,):
                    raise DimensionMismatch(
                        f"session {self.id} holds {self.dimension}-dim vectors, "
                        f"got {vec.shape}"
                    )
                if item.chunk.id in self._ids:
                    raise DuplicateChunkId(
                        f"chunk id {item.chunk.id!r} already in session {self.id}"
                    )
                self._entries.append(EmbeddedChunk(item.chunk, vec))
                self._ids.add(item.chunk.id)
                count += 1
            self._matrix = None
            self.last_used = time.time()
        self._emit("ingest", count=count)
        return count

    def seal(self):
        self._check_alive()
        self.state = STATE_SEALED

    def _snapshot(self) -> tuple[list[EmbeddedChunk], np.ndarray]:
        with self._lock:
            if self._matrix is None:
                self._matrix = np.stack([e.vector for e in self._entries])
            return self._entries[:self._matrix.shape[0]], self._matrix

    def search(self, query, n: int) -> list[ScoredChunk]:
        """Exact top-n by cosine, ties broken by ascending chunk id."""
        self._check_alive()
        if n < 1:
            raise ValueError("n must be positive")
        self.last_used = time.time()
        if not self._entries:
            return []
        query = np.asarray(query, dtype=np.float64)
        if query.shape != (self.dimension,):
            raise DimensionMismatch(
                f"query has shape {query.shape}, session is {self.dimension}-dim"
            )
        entries, matrix = self._snapshot()
        scores = kernels.cosine_scores(matrix, query)
        ranked = sorted(range(len(entries)),
                        key=lambda i: (-scores[i], entries[i].chunk.id))
        return [
            ScoredChunk(entries[i].chunk, entries[i].vector, float(scores[i]))
            for i in ranked[:n]
        ]

    def destroy(self):
        """Idempotent; entries become irrecoverable."""
        with self._lock:
            already = self.state == STATE_DESTROYED
            self.state = STATE_DESTROYED
            self._entries = []
            self._ids = set()
            self._matrix = None
        if not already:  # double-destroy stays a silent no-op
            self._emit("session_destroy")


class SessionManager:
    """Registry of live sessions; wires lifecycle events into an
    optional sink (the provenance log)."""

    def __init__(self, event_sink=None):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self._sink = event_sink

    def create(self, dimension: int) -> Session:
        if dimension < 1:
            raise ValueError("dimension must be positive")
        session = Session(id=uuid.uuid4().hex, dimension=dimension)
        session._sink = self._sink
        with self._lock:
            self._sessions[session.id] = session
        session._emit("session_create", dimension=dimension)
        return session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFound(session_id)
        return session

    def ingest(self, session_id: str, items: list[EmbeddedChunk]) -> int:
        return self.get(session_id).ingest(items)

    def destroy(self, session_id: str):
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise SessionNotFound(session_id)
        session.destroy()

    def live_sessions(self) -> list[Session]:
        with self._lock:
            return [s for s in self._sessions.values() if s.state != STATE_DESTROYED]

    def destroy_all(self):
        for session in self.live_sessions():
            self.destroy(session.id)

    def reap_idle(self, max_idle_seconds: float) -> int:
        """Destroy sessions idle longer than the limit; returns the count."""
        now = time.time()
        reaped = 0
        for session in self.live_sessions():
            if now - session.last_used > max_idle_seconds:
                self.destroy(session.id)
                reaped += 1
        return reaped
