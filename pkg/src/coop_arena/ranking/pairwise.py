from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np

from ..core import ScoreRecord
from ._backend import kernels


@dataclass(frozen=True)
class Match:
    """One comparison; ``outcome`` is agent ``a``'s score (1, 0.5 or 0)."""

    scenario_id: str
    run_index: int
    a: str
    b: str
    outcome: float


@dataclass(frozen=True, eq=False)
class PairwiseMatrix:
    """Win and tie counts between agents, plus the ordered match list."""

    agents: tuple[str, ...]
    wins: np.ndarray
    ties: np.ndarray
    matches: tuple[Match, ...] = ()

    def __post_init__(self):
        n = len(self.agents)
        if self.wins.shape != (n, n) or self.ties.shape != (n, n):
            raise ValueError("count matrices must be n x n")
        if np.any(np.diag(self.wins)) or np.any(self.wins < 0) or np.any(self.ties < 0):
            raise ValueError("wins need a zero diagonal and non-negative counts")
        if not np.array_equal(self.ties, self.ties.T):
            raise ValueError("ties must be symmetric")

    def __eq__(self, other):
        if not isinstance(other, PairwiseMatrix):
            return NotImplemented
        return (self.agents == other.agents and np.array_equal(self.wins, other.wins)
                and np.array_equal(self.ties, other.ties))

    def index(self, agent: str) -> int:
        return self.agents.index(agent)

    def margins(self) -> np.ndarray:
        return (self.wins - self.wins.T).astype(float)

    def comparisons(self) -> int:
        return int(self.wins.sum() + np.triu(self.ties, 1).sum())

    def subset(self, agents: Sequence[str]) -> "PairwiseMatrix":
        idx = [self.index(a) for a in agents]
        return PairwiseMatrix(tuple(agents), self.wins[np.ix_(idx, idx)], self.ties[np.ix_(idx, idx)])

    @classmethod
    def from_counts(cls, agents: Sequence[str], wins: Mapping[tuple[str, str], int],
                    ties: Mapping[tuple[str, str], int] | None = None) -> "PairwiseMatrix":
        """Build from ``{(winner, loser): count}`` (and symmetric tie counts)."""
        agents = tuple(agents)
        n = len(agents)
        w = np.zeros((n, n), dtype=np.int64)
        t = np.zeros((n, n), dtype=np.int64)
        for (a, b), c in wins.items():
            w[agents.index(a), agents.index(b)] += c
        for (a, b), c in (ties or {}).items():
            t[agents.index(a), agents.index(b)] += c
            t[agents.index(b), agents.index(a)] += c
        return cls(agents, w, t)


def _grouped(entries: Mapping[tuple, dict[str, list[float]]], epsilon: float) -> PairwiseMatrix:
    agents = tuple(sorted({a for per_key in entries.values() for a in per_key}))
    index = {a: i for i, a in enumerate(agents)}
    keys = sorted(entries)
    groups, idx, scores = [], [], []
    for g, key in enumerate(keys):
        for agent in sorted(entries[key]):
            values = entries[key][agent]
            groups.append(g)
            idx.append(index[agent])
            scores.append(sum(values) / len(values))
    wins, ties, ma, mb, out = kernels.tally(
        np.array(groups, dtype=np.int64), np.array(idx, dtype=np.int64), np.array(scores, dtype=np.float64),
        len(agents), float(epsilon),
    )
    # matches come out grouped by key in order, so recover each key by walking group sizes
    matches = []
    k = 0
    for key in keys:
        size = len(entries[key])
        for _ in range(size * (size - 1) // 2):
            matches.append(Match(str(key[0]), int(key[1]), agents[ma[k]], agents[mb[k]], float(out[k])))
            k += 1
    return PairwiseMatrix(agents, np.asarray(wins), np.asarray(ties), tuple(matches))


def build_pairwise(records: Iterable[ScoreRecord], epsilon: float = 1e-9, *, by: str = "run") -> PairwiseMatrix:
    """Compare every pair of agents on each shared (scenario, run).

    ``by="scenario"`` first averages each agent's runs per scenario and makes
    one comparison per shared scenario instead. Records without a normalized
    score (background seats) are ignored.
    """
    if by not in ("run", "scenario"):
        raise ValueError("by must be 'run' or 'scenario'")
    entries: dict[tuple, dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        if r.normalized is None:
            continue
        key = (r.scenario_id, r.run_index if by == "run" else -1)
        entries[key][r.agent].append(r.normalized)
    return _grouped(entries, epsilon)


@dataclass(frozen=True)
class Ballot:
    """A weak order over the agents of one (scenario, run); best tier first."""

    voter_id: tuple[str, int]
    ranking: tuple[tuple[str, ...], ...]

    def __post_init__(self):
        listed = [a for tier in self.ranking for a in tier]
        if len(listed) != len(set(listed)):
            raise ValueError("an agent appears twice on a ballot")


def make_ballots(records: Iterable[ScoreRecord], epsilon: float = 1e-9) -> list[Ballot]:
    """One ballot per (scenario, run), ordering its focal agents by raw score."""
    groups: dict[tuple[str, int], dict[str, list[float]]] = defaultdict(lambda: defaultdict(list))
    for r in records:
        if r.normalized is None:
            continue
        groups[(r.scenario_id, r.run_index)][r.agent].append(r.raw)
    ballots = []
    for key in sorted(groups):
        scored = sorted(((sum(v) / len(v), a) for a, v in groups[key].items()), key=lambda t: (-t[0], t[1]))
        tiers: list[list[str]] = []
        last = None
        for score, agent in scored:
            if last is not None and last - score <= epsilon:
                tiers[-1].append(agent)
            else:
                tiers.append([agent])
                last = score
        ballots.append(Ballot(key, tuple(tuple(t) for t in tiers)))
    return ballots


def ballots_to_pairwise(ballots: Sequence[Ballot]) -> PairwiseMatrix:
    """One comparison per ballot per pair of agents listed on it."""
    entries: dict[tuple, dict[str, list[float]]] = {}
    for ballot in ballots:
        depth = len(ballot.ranking)
        entries[ballot.voter_id] = {a: [float(depth - t)] for t, tier in enumerate(ballot.ranking) for a in tier}
    return _grouped(entries, 0.5)
