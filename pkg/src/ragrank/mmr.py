"""Stage-1 retrieval: greedy maximal-marginal-relevance selection.

Picks a small candidate set balancing query relevance against redundancy
with what is already selected. Relevance and pairwise similarities are
recomputed from the stored vectors, so selection is self-contained and
independent of upstream search scores.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .index import ScoredChunk


@dataclass(frozen=True)
class MmrConfig:
    k: int = 3
    lambda_: float = 0.5
    fetch_pool: int = 20

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("mmr.k must be positive")
        if not 0.0 <= self.lambda_ <= 1.0:
            raise ValueError("mmr.lambda must be in [0, 1]")
        if self.fetch_pool < self.k:
            raise ValueError("mmr.fetch_pool must be >= mmr.k")


def mmr_select(pool: list[ScoredChunk], query, cfg: MmrConfig) -> list[ScoredChunk]:
    """Greedily pick min(k, |pool|) chunks.

    Each round maximizes lambda * s(d, q) - (1 - lambda) * max_{d' in S}
    s(d, d'). With S empty the objective has no diversity referent, so
    the first pick is the pure relevance argmax (for every lambda,
    including 0). Ties break on ascending chunk id, which also makes the
    result independent of pool order. Output order is selection order.
    """
    if not pool:
        return []
    matrix = np.stack([np.asarray(c.vector, dtype=np.float64) for c in pool])
    rel = kernels.cosine_scores(matrix, query)
    sim = kernels.pairwise_cosine(matrix)
    ids = [c.chunk.id for c in pool]
    order = np.argsort(np.argsort(ids, kind="stable"))
    picked = kernels.mmr_greedy(rel, sim, cfg.lambda_, cfg.k, order)
    return [pool[i] for i in picked]
