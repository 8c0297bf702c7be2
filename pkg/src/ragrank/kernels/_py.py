"""Pure-Python/numpy kernel implementations.

The dense cosine products run through numpy (BLAS) and are the primary
path even when the extension is built; the greedy-selection and
power-iteration loops here are the fallback for the compiled kernels.
"""
from __future__ import annotations

import numpy as np


def cosine_scores(matrix: np.ndarray, norms: np.ndarray,
                  query: np.ndarray, qnorm: float) -> np.ndarray:
    n = matrix.shape[0]
    if qnorm == 0.0 or n == 0:
        return np.zeros(n)
    dots = matrix @ query
    out = np.zeros(n)
    nz = norms > 0.0
    out[nz] = dots[nz] / (norms[nz] * qnorm)
    return out


def pairwise_cosine(matrix: np.ndarray, norms: np.ndarray) -> np.ndarray:
    n = matrix.shape[0]
    dots = matrix @ matrix.T
    denom = np.outer(norms, norms)
    out = np.divide(dots, denom, out=np.zeros((n, n)), where=denom > 0.0)
    out = (out + out.T) / 2.0  # exact symmetry despite rounding
    np.fill_diagonal(out, 0.0)
    return out


def mmr_greedy(rel: np.ndarray, sim: np.ndarray, lam: float, k: int,
               order: np.ndarray) -> list[int]:
    n = rel.shape[0]
    k = min(k, n)
    selected: list[int] = []
    remaining = set(range(n))
    max_sim = np.zeros(n)
    for step in range(k):
        best = -1
        best_score = 0.0
        for i in remaining:
            # empty-selection convention: the first pick is the pure
            # relevance argmax (the diversity term has no referent yet)
            if step == 0:
                score = rel[i]
            else:
                score = lam * rel[i] - (1.0 - lam) * max_sim[i]
            if best < 0 or score > best_score or (
                    score == best_score and order[i] < order[best]):
                best = i
                best_score = score
        selected.append(best)
        remaining.discard(best)
        if step == 0:
            max_sim[:] = sim[best]  # similarities can be negative
        else:
            np.maximum(max_sim, sim[best], out=max_sim)
    return selected


def pagerank_power(P: np.ndarray, v: np.ndarray, alpha: float, tol: float,
                   max_iter: int) -> tuple[np.ndarray, int, float, bool]:
    k = v.shape[0]
    r = np.full(k, 1.0 / k)
    PT = P.T.copy()
    delta = float("inf")
    for it in range(1, max_iter + 1):
        nxt = alpha * (PT @ r) + (1.0 - alpha) * v
        delta = float(np.abs(nxt - r).sum())
        r = nxt
        if delta < tol:
            return r, it, delta, True
    return r, max_iter, delta, False
