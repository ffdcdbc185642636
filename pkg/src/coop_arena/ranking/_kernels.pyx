# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled ranking kernels; mirrors ``_pykernels`` exactly."""
import numpy as np
cimport numpy as cnp
from libc.math cimport pow

cnp.import_array()


def tally(groups, agents, scores, Py_ssize_t n_agents, double eps):
    cdef cnp.int64_t[:] g = np.ascontiguousarray(groups, dtype=np.int64)
    cdef cnp.int64_t[:] ag = np.ascontiguousarray(agents, dtype=np.int64)
    cdef double[:] sc = np.ascontiguousarray(scores, dtype=np.float64)
    cdef Py_ssize_t m = g.shape[0]
    cdef Py_ssize_t start = 0, end, p, q, k = 0, total = 0
    cdef Py_ssize_t a, b
    cdef double sa, sb
    wins_arr = np.zeros((n_agents, n_agents), dtype=np.int64)
    ties_arr = np.zeros((n_agents, n_agents), dtype=np.int64)
    cdef cnp.int64_t[:, :] wins = wins_arr
    cdef cnp.int64_t[:, :] ties = ties_arr

    while start < m:
        end = start
        while end < m and g[end] == g[start]:
            end += 1
        total += (end - start) * (end - start - 1) // 2
        start = end

    ma_arr = np.empty(total, dtype=np.int64)
    mb_arr = np.empty(total, dtype=np.int64)
    out_arr = np.empty(total, dtype=np.float64)
    cdef cnp.int64_t[:] ma = ma_arr
    cdef cnp.int64_t[:] mb = mb_arr
    cdef double[:] out = out_arr

    start = 0
    while start < m:
        end = start
        while end < m and g[end] == g[start]:
            end += 1
        for p in range(start, end):
            a = ag[p]
            sa = sc[p]
            for q in range(p + 1, end):
                b = ag[q]
                sb = sc[q]
                if sa - sb > eps:
                    wins[a, b] += 1
                    out[k] = 1.0
                elif sb - sa > eps:
                    wins[b, a] += 1
                    out[k] = 0.0
                else:
                    ties[a, b] += 1
                    ties[b, a] += 1
                    out[k] = 0.5
                ma[k] = a
                mb[k] = b
                k += 1
        start = end
    return wins_arr, ties_arr, ma_arr, mb_arr, out_arr


def elo_sweep(match_a, match_b, outcome, Py_ssize_t n_agents, double k_factor, double initial, trace=None):
    if trace is not None:
        from ._pykernels import elo_sweep as slow
        return slow(match_a, match_b, outcome, n_agents, k_factor, initial, trace)
    cdef cnp.int64_t[:] ma = np.ascontiguousarray(match_a, dtype=np.int64)
    cdef cnp.int64_t[:] mb = np.ascontiguousarray(match_b, dtype=np.int64)
    cdef double[:] out = np.ascontiguousarray(outcome, dtype=np.float64)
    ratings_arr = np.full(n_agents, initial, dtype=np.float64)
    cdef double[:] r = ratings_arr
    cdef Py_ssize_t t, a, b
    cdef double expected, delta
    for t in range(ma.shape[0]):
        a = ma[t]
        b = mb[t]
        expected = 1.0 / (1.0 + pow(10.0, (r[b] - r[a]) / 400.0))
        delta = k_factor * (out[t] - expected)
        r[a] += delta
        r[b] -= delta
    return ratings_arr


def lock_edges(winners, losers, Py_ssize_t n_agents):
    cdef cnp.int64_t[:] w = np.ascontiguousarray(winners, dtype=np.int64)
    cdef cnp.int64_t[:] l = np.ascontiguousarray(losers, dtype=np.int64)
    cdef Py_ssize_t e, node, top, nxt
    locked_arr = np.zeros(w.shape[0], dtype=bool)
    adj_arr = np.zeros((n_agents, n_agents), dtype=np.uint8)
    seen_arr = np.zeros(n_agents, dtype=np.uint8)
    stack_arr = np.zeros(n_agents + 1, dtype=np.int64)
    cdef cnp.uint8_t[:, :] adj = adj_arr
    cdef cnp.uint8_t[:] seen = seen_arr
    cdef cnp.int64_t[:] stack = stack_arr
    cdef bint cycle
    for e in range(w.shape[0]):
        seen[:] = 0
        top = 0
        stack[top] = l[e]
        top += 1
        seen[l[e]] = 1
        cycle = False
        while top > 0:
            top -= 1
            node = stack[top]
            if node == w[e]:
                cycle = True
                break
            for nxt in range(n_agents):
                if adj[node, nxt] and not seen[nxt]:
                    seen[nxt] = 1
                    stack[top] = nxt
                    top += 1
        if not cycle:
            adj[w[e], l[e]] = 1
            locked_arr[e] = True
    return locked_arr
