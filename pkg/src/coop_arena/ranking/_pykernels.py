"""Pure-Python ranking kernels.

Same signatures and results as the compiled ``_kernels`` module; used when
the extension is missing or ``COOP_ARENA_PURE_PYTHON=1`` is set.
"""
from __future__ import annotations

import numpy as np


def tally(groups, agents, scores, n_agents, eps):
    """Pairwise wins/ties plus the ordered match list.

    Inputs are parallel arrays sorted by group, then agent index. Returns
    ``(wins, ties, match_a, match_b, outcome)`` where ``outcome`` is the
    score of ``match_a`` (1, 0.5 or 0).
    """
    wins = [[0] * n_agents for _ in range(n_agents)]
    ties = [[0] * n_agents for _ in range(n_agents)]
    ma, mb, out = [], [], []
    groups, agents, scores = list(groups), list(agents), list(scores)
    m = len(groups)
    start = 0
    while start < m:
        end = start
        while end < m and groups[end] == groups[start]:
            end += 1
        for p in range(start, end):
            a, sa = agents[p], scores[p]
            for q in range(p + 1, end):
                b, sb = agents[q], scores[q]
                if sa - sb > eps:
                    wins[a][b] += 1
                    result = 1.0
                elif sb - sa > eps:
                    wins[b][a] += 1
                    result = 0.0
                else:
                    ties[a][b] += 1
                    ties[b][a] += 1
                    result = 0.5
                ma.append(a)
                mb.append(b)
                out.append(result)
        start = end
    return (
        np.array(wins, dtype=np.int64).reshape(n_agents, n_agents),
        np.array(ties, dtype=np.int64).reshape(n_agents, n_agents),
        np.array(ma, dtype=np.int64),
        np.array(mb, dtype=np.int64),
        np.array(out, dtype=np.float64),
    )


def elo_sweep(match_a, match_b, outcome, n_agents, k_factor, initial, trace=None):
    """Sequential Elo; ``trace(index, ratings)`` is called after every update."""
    ratings = [float(initial)] * n_agents
    for t, (a, b, s) in enumerate(zip(list(match_a), list(match_b), list(outcome))):
        expected = 1.0 / (1.0 + 10.0 ** ((ratings[b] - ratings[a]) / 400.0))
        delta = k_factor * (s - expected)
        ratings[a] += delta
        ratings[b] -= delta
        if trace is not None:
            trace(t, list(ratings))
    return np.array(ratings, dtype=np.float64)


def lock_edges(winners, losers, n_agents):
    """Lock edges in the given order unless one would close a cycle."""
    adjacency = [[] for _ in range(n_agents)]
    locked = []
    for w, l in zip(list(winners), list(losers)):
        # adding w -> l closes a cycle iff w is reachable from l
        seen = [False] * n_agents
        stack = [l]
        cycle = False
        while stack:
            node = stack.pop()
            if node == w:
                cycle = True
                break
            if seen[node]:
                continue
            seen[node] = True
            stack.extend(adjacency[node])
        if not cycle:
            adjacency[w].append(l)
        locked.append(not cycle)
    return np.array(locked, dtype=bool)
