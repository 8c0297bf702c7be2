"""Stage-2 re-ranking: personalized PageRank over a chunk similarity
graph, followed by token-budgeted context assembly.

The candidate chunks become graph nodes; edges carry pairwise cosine
weights thresholded at a minimum similarity. A damped random walk with
query-biased teleporting ranks the nodes, and the top chunks are
concatenated (rank order, provenance headers) and trimmed to the token
budget.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .corpus import Chunk
from .tokens import TokenCounter

logger = logging.getLogger(__name__)

CHUNK_HEADER = "[Source: {filename} p.{page} chunk {seq}]"


@dataclass(frozen=True)
class PrConfig:
    alpha: float = 0.85
    min_sim: float = 0.01
    top_k: int = 3
    token_budget: int = 1800
    tol: float = 1e-10
    max_iter: int = 100

    def __post_init__(self):
        if not 0.0 <= self.alpha < 1.0:
            raise ValueError("pr.alpha must be in [0, 1)")
        if self.min_sim < 0.0:
            raise ValueError("pr.min_sim must be >= 0")
        if self.top_k < 1:
            raise ValueError("pr.top_k must be >= 1")
        if self.token_budget < 1:
            raise ValueError("pr.token_budget must be positive")
        if self.tol <= 0.0:
            raise ValueError("pr.tol must be positive")
        if self.max_iter < 1:
            raise ValueError("pr.max_iter must be >= 1")


@dataclass(frozen=True)
class SimilarityGraph:
    weights: np.ndarray  # k x k, zero diagonal, symmetric, entries in {0} u [tau, 1]
    threshold: float

    @property
    def size(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True)
class RankVector:
    values: np.ndarray
    iterations: int
    residual: float
    converged: bool


@dataclass(frozen=True)
class ContextEntry:
    chunk: Chunk
    rank_score: float
    text: str  # text as included in the pack (tail-cut when truncated)
    truncated: bool


@dataclass(frozen=True)
class ContextPack:
    entries: tuple[ContextEntry, ...]
    combined_text: str
    token_count: int
    truncated: bool


def build_similarity_graph(vectors, threshold: float) -> SimilarityGraph:
    """Pairwise cosine with sub-threshold edges dropped and a zero diagonal."""
    matrix = np.stack([np.asarray(v, dtype=np.float64) for v in vectors])
    sims = kernels.pairwise_cosine(matrix)
    weights = np.where(sims >= threshold, sims, 0.0)
    np.fill_diagonal(weights, 0.0)
    return SimilarityGraph(weights=weights, threshold=threshold)


def to_transition(graph: SimilarityGraph) -> np.ndarray:
    """Row-normalize the weights; rows with no edges become uniform."""
    W = graph.weights
    k = W.shape[0]
    sums = W.sum(axis=1)
    P = np.empty_like(W)
    for i in range(k):
        P[i] = W[i] / sums[i] if sums[i] > 0.0 else 1.0 / k
    return P


def personalization(vectors, query) -> np.ndarray:
    """Teleport distribution from clipped query-chunk cosines; uniform
    when every score clips to zero."""
    matrix = np.stack([np.asarray(v, dtype=np.float64) for v in vectors])
    scores = np.maximum(kernels.cosine_scores(matrix, query), 0.0)
    total = scores.sum()
    if total <= 0.0:
        logger.warning("all query-chunk similarities non-positive; uniform teleport")
        return np.full(len(scores), 1.0 / len(scores))
    return scores / total


def pagerank(P: np.ndarray, v: np.ndarray, cfg: PrConfig) -> RankVector:
    """Damped power iteration r <- alpha P^T r + (1 - alpha) v from the
    uniform start, stopping when the L1 change drops below cfg.tol.

    Hitting max_iter is not an error: the best iterate is returned with
    converged=False (alpha < 1 guarantees convergence; the cap is a
    safety net).
    """
    if P.shape != (len(v), len(v)):
        raise ValueError(f"shape mismatch: P {P.shape}, v {len(v)}")
    r, iters, residual, converged = kernels.pagerank_power(
        P, v, cfg.alpha, cfg.tol, cfg.max_iter)
    if not converged:
        logger.warning("pagerank failed to converge in %d iterations "
                       "(final L1 change %.3e)", iters, residual)
    return RankVector(values=r, iterations=iters, residual=residual,
                      converged=converged)


def _chunk_block(chunk: Chunk, text: str) -> str:
    header = CHUNK_HEADER.format(filename=chunk.filename, page=chunk.page,
                                 seq=chunk.seq)
    return f"{header}\n{text}"


def _fit_tail_cut(parts: list[str], chunk: Chunk, counter: TokenCounter,
                  budget: int) -> str | None:
    """Longest tail-cut of the chunk whose block still fits the budget."""
    best = None
    lo, hi = 1, chunk.token_len
    while lo <= hi:
        mid = (lo + hi) // 2
        cut = counter.truncate(chunk.text, mid)
        candidate = "\n\n".join(parts + [_chunk_block(chunk, cut)])
        if counter.count(candidate) <= budget:
            best = cut
            lo = mid + 1
        else:
            hi = mid - 1
    return best


def select_context(candidates: list[tuple[Chunk, float]], cfg: PrConfig,
                   counter: TokenCounter) -> ContextPack:
    """Assemble the top chunks by rank score under the token budget.

    Chunks are kept whole in rank order; the first chunk that would
    overflow the remaining budget is tail-cut at a token boundary and
    everything after it is dropped. The budget covers the provenance
    header lines too.
    """
    ranked = sorted(candidates, key=lambda cr: (-cr[1], cr[0].id))[:cfg.top_k]
    entries: list[ContextEntry] = []
    parts: list[str] = []
    truncated = False
    for chunk, score in ranked:
        if truncated:  # everything after a cut chunk is dropped
            break
        candidate = "\n\n".join(parts + [_chunk_block(chunk, chunk.text)])
        if counter.count(candidate) <= cfg.token_budget:
            parts.append(_chunk_block(chunk, chunk.text))
            entries.append(ContextEntry(chunk, score, chunk.text, False))
            continue
        truncated = True
        cut = _fit_tail_cut(parts, chunk, counter, cfg.token_budget)
        if cut:
            parts.append(_chunk_block(chunk, cut))
            entries.append(ContextEntry(chunk, score, cut, True))
    combined = "\n\n".join(parts)
    return ContextPack(
        entries=tuple(entries),
        combined_text=combined,
        token_count=counter.count(combined),
        truncated=truncated,
    )


def rerank(candidates: list, query, cfg: PrConfig,
           counter: TokenCounter) -> tuple[ContextPack, RankVector]:
    """Full stage-2 pass over MMR candidates (ScoredChunk-like objects
    with .chunk and .vector)."""
    if not candidates:
        empty = ContextPack(entries=(), combined_text="", token_count=0,
                            truncated=False)
        return empty, RankVector(np.zeros(0), 0, 0.0, True)
    if len(candidates) == 1:
        # a single node makes the walk vacuous
        ranks = RankVector(np.ones(1), 0, 0.0, True)
    else:
        vectors = [c.vector for c in candidates]
        graph = build_similarity_graph(vectors, cfg.min_sim)
        P = to_transition(graph)
        v = personalization(vectors, query)
        ranks = pagerank(P, v, cfg)
    pairs = [(c.chunk, float(r)) for c, r in zip(candidates, ranks.values)]
    pack = select_context(pairs, cfg, counter)
    return pack, ranks
