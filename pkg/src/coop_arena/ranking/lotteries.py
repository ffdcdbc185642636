from __future__ import annotations

from typing import Iterable

import numpy as np
from scipy.optimize import linprog

from ..core import ArenaError, ScoreRecord
from .pairwise import PairwiseMatrix, ballots_to_pairwise, make_ballots
from .table import Method, RankingTable

SUPPORT_TOL = 1e-9


class ConvergenceError(ArenaError):
    pass


def certificate(x: np.ndarray, margins: np.ndarray) -> float:
    """Worst column payoff ``min_j (x^T M)_j``; a maximal lottery makes it >= 0."""
    return float(np.min(x @ margins))


def _solve(c, a_ub, b_ub, a_eq, b_eq, n):
    res = linprog(c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=b_eq, bounds=[(0, None)] * n, method="highs")
    if res.status != 0:
        raise ConvergenceError(f"linear program failed: {res.message}")
    return res.x


def maximal_lottery(margins, eps: float = 1e-6) -> np.ndarray:
    """Optimal mixed strategy of the symmetric zero-sum margin game.

    The optimal set can be a face of the simplex; we return the average of
    the per-agent maximizers of ``x_i`` over it, which is itself optimal and
    does not depend on solver vertex choice (uniform when all margins vanish).
    """
    m = np.asarray(margins, dtype=float)
    n = m.shape[0]
    if m.shape != (n, n) or not np.allclose(m, -m.T):
        raise ValueError("margin matrix must be square and antisymmetric")
    if n == 1:
        return np.ones(1)
    scale = max(1.0, float(np.abs(m).max()))
    a_ub = -(m / scale).T  # x^T M e_j >= 0 for all j
    b_ub = np.zeros(n)
    a_eq, b_eq = np.ones((1, n)), np.ones(1)
    points = []
    for i in range(n):
        c = np.zeros(n)
        c[i] = -1.0
        points.append(_solve(c, a_ub, b_ub, a_eq, b_eq, n))
    x = np.clip(np.mean(points, axis=0), 0.0, None)
    x /= x.sum()
    if certificate(x, m) < -eps:
        raise ConvergenceError(f"lottery certificate {certificate(x, m):.3g} below -{eps}")
    return x


def iml_tiers(matrix: PairwiseMatrix, eps: float = 1e-6) -> list[list[tuple[str, float]]]:
    """Support tiers of repeated maximal lotteries, each sorted by probability then name."""
    remaining = list(matrix.agents)
    margins = matrix.margins()
    tiers = []
    while remaining:
        idx = [matrix.index(a) for a in remaining]
        x = maximal_lottery(margins[np.ix_(idx, idx)], eps)
        tier = [(a, float(p)) for a, p in zip(remaining, x) if p > SUPPORT_TOL]
        tier.sort(key=lambda t: (-t[1], t[0]))
        tiers.append(tier)
        taken = {a for a, _ in tier}
        remaining = [a for a in remaining if a not in taken]
    return tiers


def iterative_maximal_lotteries(matrix: PairwiseMatrix, eps: float = 1e-6, method=Method.IML) -> RankingTable:
    """Score = N - (tier start - 1) - position/size, so tiers never overlap."""
    n = len(matrix.agents)
    rows = []
    start = 1
    for tier in iml_tiers(matrix, eps):
        for pos, (agent, _) in enumerate(tier):
            rows.append((agent, n - (start - 1) - pos / len(tier)))
        start += len(tier)
    return RankingTable.from_order(method, rows)


def evaluation_without_aggregation(records: Iterable[ScoreRecord], epsilon: float = 1e-9) -> RankingTable:
    """IML over ballots, one per (scenario, run), ranked by raw score."""
    ballots = make_ballots(records, epsilon)
    return iterative_maximal_lotteries(ballots_to_pairwise(ballots), method=Method.EWA)
