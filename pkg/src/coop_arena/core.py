"""Domain types shared by every part of the harness.

Everything here is an immutable value object. Enum members subclass ``str`` so
manifests, JSON records and hand-written specs can use plain strings.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Mapping


class ArenaError(Exception):
    """Base class for harness errors."""


class InvalidBoundsError(ArenaError, ValueError):
    pass


class CompositionError(ArenaError, ValueError):
    pass


class Mode(str, Enum):
    RESIDENT = "resident"
    VISITOR = "visitor"


class Phase(str, Enum):
    DEVELOPMENT = "development"
    EVALUATION = "evaluation"


class Role(str, Enum):
    FOCAL = "focal"
    BACKGROUND = "background"


class SubstrateId(str, Enum):
    REALITY_SHOW = "RealityShow"
    PUB_COORDINATION = "PubCoordination"
    HAGGLING = "Haggling"
    LABOR_COLLECTIVE_ACTION = "LaborCollectiveAction"
    STATE_FORMATION = "StateFormation"


class Tag(str, Enum):
    NEGOTIATION = "negotiation"
    PERSUASION = "persuasion"
    DISCOURAGING_ANTISOCIAL_BEHAVIOR = "discouraging_antisocial_behavior"
    CALCULATION = "calculation"
    COORDINATION = "coordination"
    HIDDEN_INFORMATION = "hidden_information"
    SOCIAL_NETWORKS = "social_networks"
    CONVENTION_FOLLOWING = "convention_following"


class PhaseLabel(str, Enum):
    COMMUNICATION = "communication"
    ACTION = "action"
    OUTCOME = "outcome"


def _coerce(enum_cls, value):
    """Return ``enum_cls(value)`` or ``None`` when the value is not a member."""
    if isinstance(value, enum_cls):
        return value
    try:
        return enum_cls(value)
    except ValueError:
        return None


@dataclass(frozen=True)
class Event:
    """A structured event statement issued by the game master.

    ``speaker`` is the acting seat, or ``None`` for environment events.
    """

    round: int
    speaker: int | None
    kind: str
    payload: Any = None

    def to_dict(self) -> dict:
        return {"round": self.round, "speaker": self.speaker, "kind": self.kind, "payload": self.payload}


@dataclass(frozen=True)
class Observation:
    seat: int
    substrate_id: str
    round: int
    phase_label: PhaseLabel
    public_events: tuple[Event, ...] = ()
    private_state: Mapping[str, Any] = field(default_factory=dict)
    done: bool = False


@dataclass(frozen=True)
class ActionAttempt:
    kind: str  # "message" or "choice"
    payload: Any = None


@dataclass(frozen=True)
class ScoreRecord:
    agent: str
    scenario_id: str
    run_index: int
    role: Role
    raw: float
    normalized: float | None = None

    def to_dict(self) -> dict:
        return {
            "agent": self.agent,
            "scenario_id": self.scenario_id,
            "run_index": self.run_index,
            "role": Role(self.role).value,
            "raw": self.raw,
            "normalized": self.normalized,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "ScoreRecord":
        normalized = data.get("normalized")
        return cls(
            agent=str(data["agent"]),
            scenario_id=str(data["scenario_id"]),
            run_index=int(data["run_index"]),
            role=Role(data["role"]),
            raw=float(data["raw"]),
            normalized=None if normalized is None else float(normalized),
        )


@dataclass(frozen=True)
class ScenarioSpec:
    """A scenario: substrate, background strategy and mode, plus run metadata.

    ``params`` holds substrate parameter overrides; unknown keys are ignored by
    the substrate. ``seed`` salts seat shuffling and hidden-variable draws.
    """

    scenario_id: str
    substrate_id: str
    mode: str
    background_strategy_id: str
    population_size: int
    background_count: int
    horizon: int
    theoretical_min: float
    theoretical_max: float
    tags: frozenset = frozenset()
    phase: str = Phase.DEVELOPMENT
    params: Mapping[str, Any] = field(default_factory=dict)
    seed: int = 0

    @property
    def focal_count(self) -> int:
        if Mode(self.mode) is Mode.VISITOR:
            return 1
        return self.population_size - self.background_count

    def fingerprint(self) -> tuple:
        """Everything that determines play; ignores id, phase and tags."""
        return (
            str(SubstrateId(self.substrate_id).value),
            str(Mode(self.mode).value),
            self.background_strategy_id,
            self.population_size,
            self.background_count,
            self.horizon,
            tuple(sorted((k, repr(v)) for k, v in self.params.items())),
            self.seed,
        )


@dataclass(frozen=True)
class Seat:
    index: int
    policy: Any
    role: Role
    agent: str = ""


@dataclass(frozen=True)
class SeatAssignment:
    seats: tuple[Seat, ...]

    def __len__(self) -> int:
        return len(self.seats)

    def focal_seats(self) -> list[int]:
        return [s.index for s in self.seats if s.role is Role.FOCAL]

    def background_seats(self) -> list[int]:
        return [s.index for s in self.seats if s.role is Role.BACKGROUND]


def normalize_score(raw: float, theo_min: float, theo_max: float) -> float:
    """Clamp ``raw`` into the scenario bounds and min-max rescale to [0, 1].

    Negative infinity maps to the theoretical minimum. NaN is rejected.
    """
    if not theo_min < theo_max:
        raise InvalidBoundsError(f"theoretical_min {theo_min} must be < theoretical_max {theo_max}")
    if math.isnan(raw):
        raise ValueError("raw score is NaN")
    if raw == -math.inf:
        return 0.0
    clamped = min(max(raw, theo_min), theo_max)
    return (clamped - theo_min) / (theo_max - theo_min)


def default_background_count(population_size: int, mode: str) -> int:
    if Mode(mode) is Mode.VISITOR:
        return population_size - 1
    return max(1, population_size // 3)


def compose_population(
    spec: ScenarioSpec,
    focal_policy: Any,
    background_policy: Any,
    seed: int | None = None,
    *,
    focal_agent: str = "focal",
    background_agent: str | None = None,
) -> SeatAssignment:
    """Seat focal and background policies for one episode.

    ``focal_policy`` and ``background_policy`` are either policy objects (the
    same object is placed in every seat of that role) or zero-argument
    factories, which are called once per seat. Seat order is a shuffle
    driven by ``seed`` (defaults to ``spec.seed``).
    """
    if background_agent is None:
        background_agent = f"background:{spec.background_strategy_id}"
    n = spec.population_size
    mode = Mode(spec.mode)
    if mode is Mode.VISITOR:
        n_focal = 1
    else:
        n_focal = n - spec.background_count
        if n_focal <= spec.background_count:
            raise CompositionError(
                f"resident scenario {spec.scenario_id!r}: {n_focal} focal seats is not a majority over "
                f"{spec.background_count} background seats"
            )
    if n < 2 or n_focal < 1 or n_focal >= n:
        raise CompositionError(f"cannot seat {n_focal} focal agents in a population of {n}")

    roles = [Role.FOCAL] * n_focal + [Role.BACKGROUND] * (n - n_focal)
    random.Random(spec.seed if seed is None else seed).shuffle(roles)

    def instantiate(p):
        if isinstance(p, type) or not hasattr(p, "act"):
            return p()
        return p

    seats = tuple(
        Seat(
            i,
            instantiate(focal_policy if role is Role.FOCAL else background_policy),
            role,
            focal_agent if role is Role.FOCAL else background_agent,
        )
        for i, role in enumerate(roles)
    )
    return SeatAssignment(seats)


def validate_scenario(spec: ScenarioSpec) -> list[str]:
    """Return every invariant violation of ``spec`` as a machine-readable code."""
    problems: list[str] = []
    if not spec.scenario_id:
        problems.append("empty-scenario-id")
    if _coerce(SubstrateId, spec.substrate_id) is None:
        problems.append("unknown-substrate")
    mode = _coerce(Mode, spec.mode)
    if mode is None:
        problems.append("unknown-mode")
    if _coerce(Phase, spec.phase) is None:
        problems.append("unknown-phase")
    if any(_coerce(Tag, t) is None for t in spec.tags):
        problems.append("unknown-tag")

    n, k = spec.population_size, spec.background_count
    if n < 2:
        problems.append("population-too-small")
    if not 1 <= k < n:
        problems.append("background-count-out-of-range")
    elif mode is Mode.RESIDENT and n - k <= k:
        problems.append("resident-focal-minority")
    elif mode is Mode.VISITOR and k != n - 1:
        problems.append("visitor-background-count")
    if spec.horizon < 0:
        problems.append("negative-horizon")
    lo, hi = spec.theoretical_min, spec.theoretical_max
    if any(math.isnan(float(x)) for x in (lo, hi)) or not lo < hi:
        problems.append("invalid-bounds")
    return problems
