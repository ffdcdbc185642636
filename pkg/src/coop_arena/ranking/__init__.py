"""Pairwise preferences and the five ranking methods."""
from __future__ import annotations

from typing import Iterable, Sequence

from ..core import ScoreRecord
from ._backend import BACKEND
from .condorcet import copeland, copeland_scores, duels, locked_edges, ranked_pairs, topological_order
from .elo import INITIAL_RATING, K_FACTOR, NoComparisonsError, elo, elo_ratings
from .lotteries import (
    ConvergenceError,
    certificate,
    evaluation_without_aggregation,
    iml_tiers,
    iterative_maximal_lotteries,
    maximal_lottery,
)
from .pairwise import Ballot, Match, PairwiseMatrix, ballots_to_pairwise, build_pairwise, make_ballots
from .table import Method, RankingRow, RankingTable

__all__ = [
    "BACKEND",
    "Ballot",
    "ConvergenceError",
    "INITIAL_RATING",
    "K_FACTOR",
    "Match",
    "Method",
    "NoComparisonsError",
    "PairwiseMatrix",
    "RankingRow",
    "RankingTable",
    "ballots_to_pairwise",
    "build_pairwise",
    "certificate",
    "copeland",
    "copeland_scores",
    "duels",
    "elo",
    "elo_ratings",
    "evaluation_without_aggregation",
    "iml_tiers",
    "iterative_maximal_lotteries",
    "locked_edges",
    "make_ballots",
    "maximal_lottery",
    "rank",
    "rank_all",
    "ranked_pairs",
    "topological_order",
]


def rank(records: Sequence[ScoreRecord], method, epsilon: float = 1e-9, *, by: str = "run") -> RankingTable:
    method = Method(method)
    if method is Method.EWA:
        return evaluation_without_aggregation(records, epsilon)
    matrix = build_pairwise(records, epsilon, by=by)
    if method is Method.ELO:
        return elo(matrix)
    if method is Method.COPELAND:
        return copeland(matrix)
    if method is Method.RANKED_PAIRS:
        return ranked_pairs(matrix)
    return iterative_maximal_lotteries(matrix)


def rank_all(records: Iterable[ScoreRecord], methods=None, epsilon: float = 1e-9, *, by: str = "run") -> dict[Method, RankingTable]:
    records = list(records)
    methods = list(Method) if methods is None else [Method(m) for m in methods]
    return {m: rank(records, m, epsilon, by=by) for m in methods}
