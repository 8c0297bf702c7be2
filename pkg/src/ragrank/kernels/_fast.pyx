# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels for the loop-bound retrieval hot spots: greedy MMR
selection and small-matrix PageRank power iteration. Semantics mirror
ragrank.kernels._py exactly; only the inner loops differ.

The dense cosine products are deliberately absent: numpy's BLAS matmul
already beats a naive C loop there (see benchmarks/bench_kernels.py).
"""

import numpy as np


def mmr_greedy(double[::1] rel, double[:, ::1] sim, double lam, int k,
               long[::1] order):
    cdef Py_ssize_t n = rel.shape[0]
    cdef Py_ssize_t kk = k if k < n else n
    taken_arr = np.zeros(n, dtype=np.uint8)
    max_sim_arr = np.zeros(n)
    cdef unsigned char[::1] taken = taken_arr
    cdef double[::1] max_sim = max_sim_arr
    cdef list selected = []
    cdef Py_ssize_t step, i, best
    cdef double score, best_score
    for step in range(kk):
        best = -1
        best_score = 0.0
        for i in range(n):
            if taken[i]:
                continue
            if step == 0:
                # empty-selection convention: first pick is the pure
                # relevance argmax
                score = rel[i]
            else:
                score = lam * rel[i] - (1.0 - lam) * max_sim[i]
            if best < 0 or score > best_score or (
                    score == best_score and order[i] < order[best]):
                best = i
                best_score = score
        selected.append(best)
        taken[best] = 1
        if step == 0:
            for i in range(n):  # similarities can be negative
                max_sim[i] = sim[best, i]
        else:
            for i in range(n):
                if sim[best, i] > max_sim[i]:
                    max_sim[i] = sim[best, i]
    return selected


def pagerank_power(double[:, ::1] P, double[::1] v, double alpha,
                   double tol, int max_iter):
    cdef Py_ssize_t k = v.shape[0]
    r_arr = np.full(k, 1.0 / k)
    nxt_arr = np.zeros(k)
    cdef double[::1] r = r_arr
    cdef double[::1] nxt = nxt_arr
    cdef Py_ssize_t i, j
    cdef int it
    cdef double acc, delta
    delta = float("inf")
    for it in range(1, max_iter + 1):
        delta = 0.0
        for i in range(k):
            acc = 0.0
            for j in range(k):  # (P^T r)_i = sum_j P[j, i] * r[j]
                acc += P[j, i] * r[j]
            nxt[i] = alpha * acc + (1.0 - alpha) * v[i]
        for i in range(k):
            delta += abs(nxt[i] - r[i])
            r[i] = nxt[i]
        if delta < tol:
            return r_arr, it, delta, True
    return r_arr, max_iter, delta, False
