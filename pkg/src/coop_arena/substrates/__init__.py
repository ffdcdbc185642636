"""The five cooperation-eliciting substrates and their game-master logic."""
from __future__ import annotations

import random
from dataclasses import replace
from typing import Any, Iterable, Mapping

from ..core import (
    ActionAttempt,
    Mode,
    Observation,
    Phase,
    PhaseLabel,
    ScenarioSpec,
    SubstrateId,
    default_background_count,
)
from .base import ActionGrammar, IllegalActionError, Substrate, SubstrateState, quantize
from .haggling import Haggling
from .labor import LaborCollectiveAction
from .matrix import GameKind, PayoffTable, TABLES, best_response, matrix_payoff
from .pub import PubCoordination
from .reality_show import RealityShow
from .state_formation import StateFormation

SUBSTRATES: dict[SubstrateId, Substrate] = {
    s.id: s for s in (RealityShow(), PubCoordination(), Haggling(), LaborCollectiveAction(), StateFormation())
}

__all__ = [
    "ActionGrammar",
    "GameKind",
    "IllegalActionError",
    "PayoffTable",
    "SUBSTRATES",
    "Substrate",
    "SubstrateState",
    "TABLES",
    "best_response",
    "check_scenario",
    "get_substrate",
    "initial_state",
    "is_cooperative",
    "make_scenario",
    "matrix_payoff",
    "passive_action",
    "quantize",
    "step",
    "theoretical_bounds",
]


def get_substrate(substrate_id: str | SubstrateId) -> Substrate:
    return SUBSTRATES[SubstrateId(substrate_id)]


def initial_state(spec: ScenarioSpec, seed: int) -> SubstrateState:
    return get_substrate(spec.substrate_id).initial_state(spec, seed)


def step(state: SubstrateState, joint_action: Mapping[int, ActionAttempt], rng: random.Random):
    return get_substrate(state.substrate_id).step(state, joint_action, rng)


def is_cooperative(substrate_id, phase_label, action: ActionAttempt, state: SubstrateState, seat: int) -> bool:
    return get_substrate(substrate_id).is_cooperative(PhaseLabel(phase_label), action, state, seat)


def theoretical_bounds(spec: ScenarioSpec) -> tuple[float, float]:
    return get_substrate(spec.substrate_id).theoretical_bounds(spec)


def passive_action(obs: Observation) -> ActionAttempt:
    return get_substrate(obs.substrate_id).passive_action(obs)


def make_scenario(
    scenario_id: str,
    substrate_id: str | SubstrateId,
    mode: str | Mode,
    background_strategy_id: str,
    *,
    population_size: int | None = None,
    background_count: int | None = None,
    horizon: int | None = None,
    params: Mapping[str, Any] | None = None,
    phase: str | Phase = Phase.DEVELOPMENT,
    seed: int = 0,
    tags: Iterable[str] | None = None,
    theoretical_min: float | None = None,
    theoretical_max: float | None = None,
) -> ScenarioSpec:
    """Build a ScenarioSpec, filling substrate defaults and analytic bounds."""
    sub = get_substrate(substrate_id)
    mode = Mode(mode)
    n = sub.default_seats if population_size is None else population_size
    k = default_background_count(n, mode) if background_count is None else background_count
    spec = ScenarioSpec(
        scenario_id=scenario_id,
        substrate_id=sub.id,
        mode=mode,
        background_strategy_id=background_strategy_id,
        population_size=n,
        background_count=k,
        horizon=sub.default_horizon if horizon is None else horizon,
        theoretical_min=0.0,
        theoretical_max=1.0,
        tags=frozenset(sub.tags if tags is None else tags),
        phase=Phase(phase),
        params=dict(params or {}),
        seed=seed,
    )
    lo, hi = sub.theoretical_bounds(spec)
    return replace(
        spec,
        theoretical_min=lo if theoretical_min is None else theoretical_min,
        theoretical_max=hi if theoretical_max is None else theoretical_max,
    )


def check_scenario(spec: ScenarioSpec) -> list[str]:
    """Substrate-level checks that the type-level validator cannot make."""
    try:
        sub = get_substrate(spec.substrate_id)
    except ValueError:
        return []
    problem = sub.check_population(spec.population_size)
    return [problem] if problem else []
