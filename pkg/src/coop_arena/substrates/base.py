from __future__ import annotations

import copy
import math
import random
from dataclasses import dataclass, field
from typing import Any, Mapping

from ..core import ActionAttempt, ArenaError, Event, Observation, PhaseLabel, ScenarioSpec, SubstrateId, Tag


class IllegalActionError(ArenaError, ValueError):
    def __init__(self, seat: int, reason: str):
        super().__init__(f"seat {seat}: {reason}")
        self.seat = seat
        self.reason = reason


@dataclass
class SubstrateState:
    """Game state for one episode.

    Treat as a value: ``Substrate.step`` never mutates its input and returns a
    fresh state. ``data`` holds the substrate-specific record.
    """

    substrate_id: str
    n_seats: int
    horizon: int
    round: int
    phase: PhaseLabel
    scores: list[float]
    params: dict[str, Any]
    data: dict[str, Any]
    done: bool = False


@dataclass(frozen=True)
class ActionGrammar:
    """Legal output description for one (substrate, phase, seat) decision.

    ``tokens`` maps case-insensitive words to payloads. ``numeric`` is an
    inclusive ``(low, high)`` range for number answers, snapped to
    ``granularity`` when one is given. ``extras`` maps payload keys to regexes
    whose first group (an integer) is attached to a numeric answer; the
    answer then becomes a dict with the number under ``numeric_key``.
    """

    kind: str
    description: str
    tokens: Mapping[str, Any] = field(default_factory=dict)
    numeric: tuple[float, float] | None = None
    granularity: float | None = None
    integer: bool = False
    extras: Mapping[str, str] = field(default_factory=dict)
    numeric_key: str = "value"


def quantize(x: float, step: float) -> float:
    """Round half-up onto the ``step`` grid (no banker's rounding)."""
    return round(math.floor(x / step + 0.5) * step, 10)


def on_grid(x: float, step: float) -> bool:
    return abs(x / step - round(x / step)) < 1e-9


def as_number(payload: Any) -> float | None:
    if isinstance(payload, bool):
        return None
    if isinstance(payload, (int, float)) and math.isfinite(payload):
        return float(payload)
    return None


class Substrate:
    """Base class for the game-master logic of one substrate.

    Subclasses implement ``setup`` (hidden-variable draws), ``advance``
    (apply one validated joint action in place and return events),
    ``check`` (legality), ``private_view``, ``passive_action`` and the
    cooperation labelling.
    """

    id: SubstrateId
    tags: frozenset[Tag] = frozenset()
    defaults: dict[str, Any] = {}
    default_seats: int = 2
    default_horizon: int = 1
    has_communication: bool = False

    # -- configuration -------------------------------------------------
    def params(self, spec: ScenarioSpec | None = None) -> dict[str, Any]:
        merged = copy.deepcopy(self.defaults)
        if spec is not None:
            merged.update(copy.deepcopy(dict(spec.params)))
        return merged

    def check_population(self, n: int) -> str | None:
        return None if n >= 2 else "population-too-small"

    def theoretical_bounds(self, spec: ScenarioSpec) -> tuple[float, float]:
        raise NotImplementedError

    # -- dynamics ------------------------------------------------------
    def initial_state(self, spec: ScenarioSpec, seed: int) -> SubstrateState:
        params = self.params(spec)
        first_phase = PhaseLabel.COMMUNICATION if self._communicates(params) else PhaseLabel.ACTION
        state = SubstrateState(
            substrate_id=self.id.value,
            n_seats=spec.population_size,
            horizon=spec.horizon,
            round=0,
            phase=first_phase,
            scores=[0.0] * spec.population_size,
            params=params,
            data={},
            done=spec.horizon <= 0,
        )
        if state.done:
            state.phase = PhaseLabel.OUTCOME
        self.setup(state, random.Random(seed))
        return state

    def _communicates(self, params: Mapping[str, Any]) -> bool:
        return self.has_communication and bool(params.get("communication", True))

    def setup(self, state: SubstrateState, rng: random.Random) -> None:
        pass

    def step(self, state: SubstrateState, joint_action: Mapping[int, ActionAttempt], rng: random.Random):
        """Apply one joint action; return ``(next_state, observations, events)``."""
        if state.done:
            raise ArenaError("episode already finished")
        for seat in range(state.n_seats):
            reason = self.check(state, seat, joint_action.get(seat))
            if reason is not None:
                raise IllegalActionError(seat, reason)
        nxt = copy.deepcopy(state)
        events = self.advance(nxt, joint_action, rng)
        if nxt.done:
            nxt.phase = PhaseLabel.OUTCOME
        observations = {seat: self.observe(nxt, seat, events) for seat in range(nxt.n_seats)}
        return nxt, observations, events

    def _next_phase(self, state: SubstrateState) -> None:
        """Advance a communication/action cycle; ends the episode at the horizon."""
        if state.phase is PhaseLabel.COMMUNICATION:
            state.phase = PhaseLabel.ACTION
            return
        state.round += 1
        if state.round >= state.horizon:
            state.done = True
        else:
            state.phase = PhaseLabel.COMMUNICATION if self._communicates(state.params) else PhaseLabel.ACTION

    def observe(self, state: SubstrateState, seat: int, events=()) -> Observation:
        return Observation(
            seat=seat,
            substrate_id=state.substrate_id,
            round=state.round,
            phase_label=state.phase,
            public_events=tuple(events),
            private_state=self.private_view(state, seat),
            done=state.done,
        )

    # -- per-substrate hooks --------------------------------------------
    def advance(self, state: SubstrateState, joint_action: Mapping[int, ActionAttempt], rng: random.Random) -> list[Event]:
        raise NotImplementedError

    def check(self, state: SubstrateState, seat: int, action: ActionAttempt | None) -> str | None:
        raise NotImplementedError

    def private_view(self, state: SubstrateState, seat: int) -> dict[str, Any]:
        raise NotImplementedError

    def passive_action(self, obs: Observation) -> ActionAttempt:
        raise NotImplementedError

    def default_action(self, state: SubstrateState, seat: int) -> ActionAttempt:
        return self.passive_action(self.observe(state, seat))

    def is_cooperative(self, phase_label: PhaseLabel, action: ActionAttempt, state: SubstrateState, seat: int) -> bool:
        raise NotImplementedError

    def grammar(self, obs: Observation) -> ActionGrammar:
        raise NotImplementedError


def expect_kind(action: ActionAttempt | None, kind: str) -> str | None:
    if action is None:
        return "missing action"
    if not isinstance(action, ActionAttempt):
        return f"not an ActionAttempt: {type(action).__name__}"
    if action.kind != kind:
        return f"expected a {kind}, got {action.kind!r}"
    return None
