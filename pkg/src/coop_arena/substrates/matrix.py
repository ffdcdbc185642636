"""Two-player binary-action games used by the reality-show mini-games."""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum


class GameKind(str, Enum):
    PD = "PD"
    CHICKEN = "Chicken"
    STAG_HUNT = "StagHunt"


C, D = "C", "D"
ACTIONS = (C, D)


@dataclass(frozen=True)
class PayoffTable:
    """Row-player/column-player payoffs for each joint action ``(a, b)``."""

    kind: GameKind
    entries: dict

    def __post_init__(self):
        if set(self.entries) != {(a, b) for a in ACTIONS for b in ACTIONS}:
            raise ValueError("payoff table must cover all four joint actions")
        for (a, b), (pa, pb) in self.entries.items():
            if self.entries[(b, a)] != (pb, pa):
                raise ValueError(f"{self.kind.value} table is not symmetric")
        reward, sucker = self.entries[(C, C)][0], self.entries[(C, D)][0]
        temptation, punishment = self.entries[(D, C)][0], self.entries[(D, D)][0]
        if self.kind is GameKind.PD:
            if not (temptation > reward > punishment > sucker and 2 * reward > temptation + sucker):
                raise ValueError("PD requires T > R > P > S and 2R > T + S")
        elif self.kind is GameKind.STAG_HUNT:
            if not (reward > temptation >= punishment > sucker):
                raise ValueError("stag hunt requires R > T >= P > S")
        elif self.kind is GameKind.CHICKEN:
            worst = self.entries[(D, D)][0]
            others = [self.entries[k][0] for k in self.entries if k != (D, D)]
            if not all(worst < o for o in others):
                raise ValueError("chicken requires mutual defection to be the unique worst outcome")

    @classmethod
    def from_trps(cls, kind: GameKind, temptation: float, reward: float, punishment: float, sucker: float) -> "PayoffTable":
        return cls(
            kind,
            {
                (C, C): (reward, reward),
                (C, D): (sucker, temptation),
                (D, C): (temptation, sucker),
                (D, D): (punishment, punishment),
            },
        )

    def payoff(self, a: str, b: str) -> tuple[float, float]:
        return self.entries[(a, b)]

    @property
    def best(self) -> float:
        return max(p for p, _ in self.entries.values())

    @property
    def worst(self) -> float:
        return min(p for p, _ in self.entries.values())


TABLES = {
    GameKind.PD: PayoffTable.from_trps(GameKind.PD, 5, 3, 1, 0),
    GameKind.CHICKEN: PayoffTable.from_trps(GameKind.CHICKEN, 3, 2, 0, 1),
    GameKind.STAG_HUNT: PayoffTable.from_trps(GameKind.STAG_HUNT, 3, 4, 2, 0),
}


def matrix_payoff(kind: GameKind | str, a: str, b: str) -> tuple[float, float]:
    return TABLES[GameKind(kind)].payoff(a, b)


def best_response(kind: GameKind | str, opponent_action: str) -> str:
    """Myopic best response; ties go to cooperation."""
    table = TABLES[GameKind(kind)]
    coop = table.payoff(C, opponent_action)[0]
    defect = table.payoff(D, opponent_action)[0]
    return D if defect > coop else C
