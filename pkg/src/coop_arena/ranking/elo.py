from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from ..core import ArenaError
from ._backend import kernels
from .pairwise import Match, PairwiseMatrix
from .table import Method, RankingTable

K_FACTOR = 32.0
INITIAL_RATING = 1500.0


class NoComparisonsError(ArenaError, ValueError):
    pass


def elo_ratings(
    matches: PairwiseMatrix | Sequence[Match],
    k_factor: float = K_FACTOR,
    initial: float = INITIAL_RATING,
    *,
    trace: Callable[[int, list[float]], None] | None = None,
) -> dict[str, float]:
    """Sequential Elo over matches sorted by (scenario, run, a, b).

    Every update moves the two ratings by opposite amounts, so their sum
    stays at ``n * initial``. ``trace(step, ratings)`` sees each update,
    with ratings in sorted agent order.
    """
    if isinstance(matches, PairwiseMatrix):
        agents = list(matches.agents)
        matches = list(matches.matches)
    else:
        matches = list(matches)
        agents = sorted({m.a for m in matches} | {m.b for m in matches})
    if not matches:
        raise NoComparisonsError("Elo needs at least one comparison")
    ordered = []
    for m in matches:
        if m.b < m.a:
            m = Match(m.scenario_id, m.run_index, m.b, m.a, 1.0 - m.outcome)
        ordered.append(m)
    ordered.sort(key=lambda m: (m.scenario_id, m.run_index, m.a, m.b))
    index = {a: i for i, a in enumerate(agents)}
    ratings = kernels.elo_sweep(
        np.array([index[m.a] for m in ordered], dtype=np.int64),
        np.array([index[m.b] for m in ordered], dtype=np.int64),
        np.array([m.outcome for m in ordered], dtype=np.float64),
        len(agents), float(k_factor), float(initial), trace,
    )
    return {a: float(ratings[i]) for i, a in enumerate(agents)}


def elo(matrix: PairwiseMatrix, k_factor: float = K_FACTOR, initial: float = INITIAL_RATING) -> RankingTable:
    return RankingTable.from_scores(Method.ELO, elo_ratings(matrix, k_factor, initial))
