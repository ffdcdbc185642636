from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Mapping


class Method(str, Enum):
    ELO = "Elo"
    COPELAND = "Copeland"
    RANKED_PAIRS = "RankedPairs"
    IML = "IML"
    EWA = "EwA"


@dataclass(frozen=True)
class RankingRow:
    rank: int
    agent: str
    score: float


@dataclass(frozen=True)
class RankingTable:
    """Rows in rank order. Ranks are row positions; equal scores keep name order."""

    method: Method
    rows: tuple[RankingRow, ...]

    @classmethod
    def from_scores(cls, method, scores: Mapping[str, float]) -> "RankingTable":
        ordered = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
        return cls.from_order(method, [(a, s) for a, s in ordered])

    @classmethod
    def from_order(cls, method, ordered: Iterable[tuple[str, float]]) -> "RankingTable":
        return cls(Method(method), tuple(RankingRow(i + 1, a, float(s)) for i, (a, s) in enumerate(ordered)))

    @property
    def order(self) -> list[str]:
        return [r.agent for r in self.rows]

    def rank_of(self, agent: str) -> int:
        for r in self.rows:
            if r.agent == agent:
                return r.rank
        raise KeyError(agent)

    def scores(self) -> dict[str, float]:
        return {r.agent: r.score for r in self.rows}

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["rank", "submission", "score"])
        for r in self.rows:
            writer.writerow([r.rank, r.agent, f"{r.score:.6g}"])
        return buf.getvalue()

    def to_markdown(self, digits: int = 2) -> str:
        lines = ["| Rank | Submission | Score |", "|---:|:---|---:|"]
        lines += [f"| {r.rank} | {r.agent} | {r.score:.{digits}f} |" for r in self.rows]
        return "\n".join(lines) + "\n"
