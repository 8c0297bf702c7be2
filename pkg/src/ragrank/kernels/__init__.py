"""Numeric kernels for the retrieval hot path.

Two kinds of kernel live here. The dense cosine products always run
through numpy, whose BLAS matmul is already a compiled kernel. The
loop-bound pieces (greedy MMR selection, small-matrix power iteration)
have a Cython implementation (`ragrank.kernels._fast`) selected at
import, with the pure-Python twin in `_py` as fallback; set
RAGRANK_PURE_PYTHON=1 to force the fallback. `benchmarks/bench_kernels.py`
measures both sides.
"""
from __future__ import annotations

import os

import numpy as np

from . import _py

_impl = _py
BACKEND = "python"
if os.environ.get("RAGRANK_PURE_PYTHON", "").lower() not in ("1", "true", "yes"):
    try:
        from . import _fast as _impl  # type: ignore[no-redef]

        BACKEND = "compiled"
    except ImportError:
        pass


def active_backend() -> str:
    return BACKEND


def _as_matrix(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=np.float64)


def cosine_scores(matrix, query) -> np.ndarray:
    """Cosine of each matrix row against the query; zero vectors score 0."""
    matrix = _as_matrix(matrix)
    query = np.ascontiguousarray(query, dtype=np.float64)
    norms = np.linalg.norm(matrix, axis=1)
    qnorm = float(np.linalg.norm(query))
    return np.asarray(_py.cosine_scores(matrix, norms, query, qnorm))


def pairwise_cosine(matrix) -> np.ndarray:
    """Symmetric cosine matrix with a zero diagonal; zero rows give 0."""
    matrix = _as_matrix(matrix)
    norms = np.linalg.norm(matrix, axis=1)
    return np.asarray(_py.pairwise_cosine(matrix, norms))


def mmr_greedy(rel, sim, lam: float, k: int, order) -> list[int]:
    """Greedy maximal-marginal-relevance selection over precomputed
    relevance and pairwise-similarity values. `order[i]` ranks candidate
    i for tie-breaking (lower wins)."""
    rel = np.ascontiguousarray(rel, dtype=np.float64)
    sim = _as_matrix(sim)
    order = np.ascontiguousarray(order, dtype=np.int64)
    return list(_impl.mmr_greedy(rel, sim, float(lam), int(k), order))


def pagerank_power(P, v, alpha: float, tol: float, max_iter: int):
    """Damped power iteration from the uniform start vector.

    Returns (rank vector, iterations, final L1 change, converged).
    """
    P = _as_matrix(P)
    v = np.ascontiguousarray(v, dtype=np.float64)
    r, iters, delta, converged = _impl.pagerank_power(
        P, v, float(alpha), float(tol), int(max_iter))
    return np.asarray(r), int(iters), float(delta), bool(converged)
