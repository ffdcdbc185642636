from __future__ import annotations

from ..core import ActionAttempt, Event, PhaseLabel, ScenarioSpec, SubstrateId, Tag
from .base import ActionGrammar, Substrate, expect_kind
from .matrix import ACTIONS, TABLES, C, D, GameKind


class RealityShow(Substrate):
    """Round-robin mini-games cycling through PD, Chicken and Stag Hunt.

    Every round each seat broadcasts an intent token, then plays the round's
    game against every other seat. An action is either a single token used
    against everyone or a ``{opponent_seat: token}`` mapping.
    """

    id = SubstrateId.REALITY_SHOW
    tags = frozenset({Tag.DISCOURAGING_ANTISOCIAL_BEHAVIOR, Tag.PERSUASION, Tag.CALCULATION, Tag.CONVENTION_FOLLOWING})
    default_seats = 4
    default_horizon = 10
    has_communication = True
    defaults = {"games": ["PD", "Chicken", "StagHunt"], "communication": True}

    def game_for_round(self, params, rnd: int) -> GameKind:
        games = params["games"]
        return GameKind(games[rnd % len(games)])

    def theoretical_bounds(self, spec: ScenarioSpec) -> tuple[float, float]:
        params = self.params(spec)
        opponents = spec.population_size - 1
        kinds = [self.game_for_round(params, r) for r in range(spec.horizon)]
        lo = sum(TABLES[k].worst for k in kinds) * opponents
        hi = sum(TABLES[k].best for k in kinds) * opponents
        return float(lo), float(hi)

    def setup(self, state, rng):
        state.data["declared"] = {}

    @staticmethod
    def _targets(payload, seat: int, n: int) -> dict[int, str] | None:
        opponents = [j for j in range(n) if j != seat]
        if payload in ACTIONS:
            return {j: payload for j in opponents}
        if isinstance(payload, dict):
            try:
                mapping = {int(k): v for k, v in payload.items()}
            except (TypeError, ValueError):
                return None
            if sorted(mapping) != opponents or any(v not in ACTIONS for v in mapping.values()):
                return None
            return mapping
        return None

    def check(self, state, seat, action):
        if state.phase is PhaseLabel.COMMUNICATION:
            problem = expect_kind(action, "message")
            if problem is None and action.payload not in ACTIONS:
                problem = f"intent must be one of {ACTIONS}"
            return problem
        problem = expect_kind(action, "choice")
        if problem is None and self._targets(action.payload, seat, state.n_seats) is None:
            problem = "choice must be C, D or a complete {opponent: C/D} mapping"
        return problem

    def advance(self, state, joint_action, rng):
        rnd, n = state.round, state.n_seats
        events = []
        if state.phase is PhaseLabel.COMMUNICATION:
            state.data["declared"] = {}
            for seat in range(n):
                token = joint_action[seat].payload
                state.data["declared"][seat] = token
                events.append(Event(rnd, seat, "declare", {"intent": token, "cooperative": token == C}))
        else:
            kind = self.game_for_round(state.params, rnd)
            plans = {seat: self._targets(joint_action[seat].payload, seat, n) for seat in range(n)}
            for i in range(n):
                for j in range(i + 1, n):
                    a, b = plans[i][j], plans[j][i]
                    pa, pb = TABLES[kind].payoff(a, b)
                    state.scores[i] += pa
                    state.scores[j] += pb
                    events.append(Event(rnd, i, "play", {"target": j, "game": kind.value, "action": a, "cooperative": a == C, "payoff": pa}))
                    events.append(Event(rnd, j, "play", {"target": i, "game": kind.value, "action": b, "cooperative": b == C, "payoff": pb}))
        self._next_phase(state)
        return events

    def private_view(self, state, seat):
        rnd = min(state.round, max(state.horizon - 1, 0))
        return {
            "seat": seat,
            "opponents": [j for j in range(state.n_seats) if j != seat],
            "game": self.game_for_round(state.params, rnd).value if state.horizon else None,
            "rounds_left": state.horizon - state.round,
            "score": state.scores[seat],
        }

    def passive_action(self, obs):
        if obs.phase_label is PhaseLabel.COMMUNICATION:
            return ActionAttempt("message", D)
        return ActionAttempt("choice", D)

    def is_cooperative(self, phase_label, action, state, seat):
        if phase_label is PhaseLabel.COMMUNICATION:
            return action.payload == C
        plan = self._targets(action.payload, seat, state.n_seats)
        return plan is not None and all(v == C for v in plan.values())

    def grammar(self, obs):
        tokens = {"c": C, "cooperate": C, "cooperation": C, "d": D, "defect": D, "defection": D}
        if obs.phase_label is PhaseLabel.COMMUNICATION:
            return ActionGrammar("message", "Announce your intent: answer COOPERATE or DEFECT.", tokens)
        game = obs.private_state.get("game")
        return ActionGrammar("choice", f"Choose your move in this {game} round: answer COOPERATE or DEFECT.", tokens)
