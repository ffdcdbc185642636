from __future__ import annotations

import math

from ..core import ActionAttempt, Event, PhaseLabel, ScenarioSpec, SubstrateId, Tag
from .base import ActionGrammar, Substrate, as_number, expect_kind, on_grid

ACCEPT, PERSUADE, REJECT, WAIT = "accept", "persuade", "reject", "wait"


class StateFormation(Substrate):
    """Two village elders bargain over how to split a defense burden.

    Elders alternate turns (elder A on even rounds). On its turn an elder
    proposes its own burden share, accepts the counterpart's proposal,
    persuades its constituency (costly, raises the approval threshold) or
    rejects. An alliance forms only when the accepted split is within both
    constituencies' thresholds. Pairs without an alliance at the horizon
    are raided.
    """

    id = SubstrateId.STATE_FORMATION
    tags = frozenset({Tag.NEGOTIATION, Tag.PERSUASION})
    default_seats = 2
    default_horizon = 6
    defaults = {
        "value": 3.0,
        "burden_cost": 2.0,
        "raid_loss": 2.0,
        "persuade_cost": 0.3,
        "persuade_gain": 0.2,
        "thresholds": [0.3, 0.4, 0.5, 0.6, 0.7],
        "share_step": 0.1,
    }

    def check_population(self, n):
        if n < 2 or n % 2:
            return "seat-count-unsupported"
        return None

    def theoretical_bounds(self, spec: ScenarioSpec):
        p = self.params(spec)
        turns = math.ceil(spec.horizon / 2)
        spent = p["persuade_cost"] * turns
        lo = min(-p["raid_loss"], p["value"] - p["burden_cost"]) - spent
        hi = max(p["value"], -p["raid_loss"])
        return float(min(lo, 0.0)), float(max(hi, 0.0))

    def setup(self, state, rng):
        thresholds = state.params["thresholds"]
        pairs = []
        for _ in range(state.n_seats // 2):
            pairs.append({"thresholds": [rng.choice(thresholds), rng.choice(thresholds)], "standing": None, "status": "open", "persuasions": [0, 0]})
        state.data["pairs"] = pairs

    def to_move(self, state, seat) -> bool:
        pair = state.data["pairs"][seat // 2]
        return not state.done and pair["status"] == "open" and state.round % 2 == seat % 2

    def standing_burden(self, state, seat):
        """My burden under the counterpart's standing proposal, if any."""
        standing = state.data["pairs"][seat // 2]["standing"]
        if standing is None or standing[0] == seat:
            return None
        return round(1.0 - standing[1], 10)

    def check(self, state, seat, action):
        if not self.to_move(state, seat):
            return None
        problem = expect_kind(action, "choice")
        if problem:
            return problem
        payload = action.payload
        if payload in (PERSUADE, REJECT):
            return None
        if payload == ACCEPT:
            return None if self.standing_burden(state, seat) is not None else "no standing proposal to accept"
        share = as_number(payload)
        if share is None or not 0.0 - 1e-9 <= share <= 1.0 + 1e-9 or not on_grid(share, state.params["share_step"]):
            return f"choice must be accept/persuade/reject or an own burden share on the {state.params['share_step']} grid in [0, 1]"
        return None

    def advance(self, state, joint_action, rng):
        rnd, p = state.round, state.params
        events = []
        for k, pair in enumerate(state.data["pairs"]):
            if pair["status"] != "open":
                continue
            role = rnd % 2
            seat = 2 * k + role
            action = joint_action[seat]
            coop = self.is_cooperative(PhaseLabel.ACTION, action, state, seat)
            if action.payload == PERSUADE:
                state.scores[seat] -= p["persuade_cost"]
                pair["persuasions"][role] += 1
                pair["thresholds"][role] = min(1.0, round(pair["thresholds"][role] + p["persuade_gain"], 10))
                events.append(Event(rnd, seat, "persuade", {"pair": k, "cooperative": coop}))
            elif action.payload == REJECT:
                events.append(Event(rnd, seat, "reject", {"pair": k, "cooperative": coop}))
            elif action.payload == ACCEPT:
                mine = self.standing_burden(state, seat)
                burdens = [0.0, 0.0]
                burdens[role], burdens[1 - role] = mine, round(1.0 - mine, 10)
                vetoes = [2 * k + r for r in (0, 1) if burdens[r] > pair["thresholds"][r] + 1e-9]
                if vetoes:
                    events.append(Event(rnd, seat, "accept", {"pair": k, "cooperative": coop}))
                    events.append(Event(rnd, None, "veto", {"pair": k, "seats": vetoes}))
                else:
                    pair["status"] = "alliance"
                    for r in (0, 1):
                        state.scores[2 * k + r] += p["value"] - p["burden_cost"] * burdens[r]
                    events.append(Event(rnd, seat, "accept", {"pair": k, "cooperative": coop}))
                    events.append(Event(rnd, None, "alliance", {"pair": k, "burdens": burdens}))
            else:
                share = round(float(action.payload), 10)
                pair["standing"] = (seat, share)
                events.append(Event(rnd, seat, "propose", {"pair": k, "own_burden": share, "cooperative": coop}))
        state.round += 1
        if all(pr["status"] != "open" for pr in state.data["pairs"]):
            state.done = True
        elif state.round >= state.horizon:
            state.done = True
            for k, pair in enumerate(state.data["pairs"]):
                if pair["status"] == "open":
                    pair["status"] = "raided"
                    for r in (0, 1):
                        state.scores[2 * k + r] -= p["raid_loss"]
                    events.append(Event(rnd, None, "raid", {"pair": k, "loss": p["raid_loss"]}))
        return events

    def private_view(self, state, seat):
        pair = state.data["pairs"][seat // 2]
        role = seat % 2
        own = pair["standing"][1] if pair["standing"] and pair["standing"][0] == seat else None
        p = state.params
        return {
            "seat": seat,
            "pair": seat // 2,
            "role": "elder_a" if role == 0 else "elder_b",
            "threshold": pair["thresholds"][role],
            "to_move": self.to_move(state, seat),
            "standing_burden": self.standing_burden(state, seat),
            "own_proposal": own,
            "status": pair["status"],
            "rounds_left": state.horizon - state.round,
            "value": p["value"],
            "burden_cost": p["burden_cost"],
            "raid_loss": p["raid_loss"],
            "persuade_cost": p["persuade_cost"],
            "persuade_gain": p["persuade_gain"],
            "share_step": p["share_step"],
            "score": state.scores[seat],
        }

    def passive_action(self, obs):
        if not obs.private_state.get("to_move"):
            return ActionAttempt("choice", WAIT)
        return ActionAttempt("choice", REJECT)

    def is_cooperative(self, phase_label, action, state, seat):
        if not self.to_move(state, seat):
            return True
        payload = action.payload
        if payload in (ACCEPT, PERSUADE):
            return True
        if payload == REJECT:
            return False
        share = as_number(payload)
        return share is not None and share >= 0.5 - 1e-9

    def grammar(self, obs):
        view = obs.private_state
        tokens = {"persuade": PERSUADE, "reject": REJECT, "pass": REJECT}
        if view.get("standing_burden") is not None:
            tokens["accept"] = ACCEPT
        return ActionGrammar(
            "choice",
            "Answer ACCEPT, PERSUADE, REJECT, or a number between 0 and 1 (steps of "
            f"{view.get('share_step', 0.1)}) proposing your own share of the defense burden.",
            tokens,
            numeric=(0.0, 1.0),
            granularity=view.get("share_step", 0.1),
        )
