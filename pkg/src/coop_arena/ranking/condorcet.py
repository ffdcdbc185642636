from __future__ import annotations

import heapq

import numpy as np

from ._backend import kernels
from .pairwise import PairwiseMatrix
from .table import Method, RankingTable


def copeland_scores(matrix: PairwiseMatrix) -> dict[str, float]:
    """Duel wins plus half a point per drawn duel (pairs never compared draw)."""
    w = matrix.wins
    n = len(matrix.agents)
    scores = [0.0] * n
    for i in range(n):
        for j in range(i + 1, n):
            if w[i, j] > w[j, i]:
                scores[i] += 1
            elif w[j, i] > w[i, j]:
                scores[j] += 1
            else:
                scores[i] += 0.5
                scores[j] += 0.5
    return dict(zip(matrix.agents, scores))


def copeland(matrix: PairwiseMatrix) -> RankingTable:
    return RankingTable.from_scores(Method.COPELAND, copeland_scores(matrix))


def duels(matrix: PairwiseMatrix) -> list[tuple[str, str, float]]:
    """Positive-margin duels as (winner, loser, margin), in locking order."""
    m = matrix.margins()
    names = matrix.agents
    out = [(names[i], names[j], float(m[i, j])) for i in range(len(names)) for j in range(len(names)) if m[i, j] > 0]
    out.sort(key=lambda d: (-d[2], d[0], d[1]))
    return out


def locked_edges(matrix: PairwiseMatrix) -> list[tuple[str, str]]:
    names = matrix.agents
    order = duels(matrix)
    flags = kernels.lock_edges(
        np.array([names.index(w) for w, _, _ in order], dtype=np.int64),
        np.array([names.index(l) for _, l, _ in order], dtype=np.int64),
        len(names),
    )
    return [(w, l) for (w, l, _), keep in zip(order, flags) if keep]


def topological_order(agents, edges) -> list[str]:
    """Kahn's algorithm, always taking the lexicographically smallest source."""
    indegree = {a: 0 for a in agents}
    out: dict[str, list[str]] = {a: [] for a in agents}
    for w, l in edges:
        out[w].append(l)
        indegree[l] += 1
    ready = [a for a in agents if indegree[a] == 0]
    heapq.heapify(ready)
    order = []
    while ready:
        a = heapq.heappop(ready)
        order.append(a)
        for b in out[a]:
            indegree[b] -= 1
            if indegree[b] == 0:
                heapq.heappush(ready, b)
    return order


def ranked_pairs(matrix: PairwiseMatrix) -> RankingTable:
    """Tideman's ranked pairs. The score column counts each agent's locked out-edges."""
    edges = locked_edges(matrix)
    wins_locked = {a: 0 for a in matrix.agents}
    for w, _ in edges:
        wins_locked[w] += 1
    order = topological_order(matrix.agents, edges)
    return RankingTable.from_order(Method.RANKED_PAIRS, [(a, wins_locked[a]) for a in order])
