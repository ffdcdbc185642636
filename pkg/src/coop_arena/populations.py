"""Scripted background strategies and the policy interface.

A policy is any object with ``reset(seed)`` and ``act(observation)``. The
scripted strategies below keep the public events they have seen and derive
every decision from those plus the observation's private state.
"""
from __future__ import annotations

import random
from enum import Enum
from typing import Protocol, runtime_checkable

from .core import ActionAttempt, ArenaError, Event, Observation, PhaseLabel, SubstrateId
from .substrates import best_response, quantize
from .substrates.haggling import ACCEPT as H_ACCEPT
from .substrates.haggling import SELLER, WAIT, WALK, fair_price
from .substrates.labor import STRIKE, WORK
from .substrates.matrix import C, D
from .substrates.pub import HOME, coordination_target
from .substrates.state_formation import ACCEPT as SF_ACCEPT
from .substrates.state_formation import PERSUADE, REJECT


class UnsupportedStrategyError(ArenaError, ValueError):
    pass


class BackgroundStrategyId(str, Enum):
    NAIVE_ALTRUIST = "NaiveAltruist"
    DEFECTOR = "Defector"
    CONDITIONAL_COOPERATOR = "ConditionalCooperator"
    GRIM_TRIGGER = "GrimTrigger"
    STUBBORN = "Stubborn"
    FAIR_SPLITTER = "FairSplitter"
    RANDOM = "Random"
    RATIONAL_BASELINE = "RationalBaseline"


@runtime_checkable
class Policy(Protocol):
    def reset(self, seed: int) -> None: ...

    def act(self, observation: Observation) -> ActionAttempt: ...


_HANDLERS = {
    SubstrateId.REALITY_SHOW: "reality_show",
    SubstrateId.PUB_COORDINATION: "pub",
    SubstrateId.HAGGLING: "haggling",
    SubstrateId.LABOR_COLLECTIVE_ACTION: "labor",
    SubstrateId.STATE_FORMATION: "state_formation",
}

# Event kinds that record a seat's move in the action phase.
_MOVE_EVENTS = {
    SubstrateId.REALITY_SHOW: {"play"},
    SubstrateId.PUB_COORDINATION: {"attend"},
    SubstrateId.HAGGLING: {"offer", "accept", "walk"},
    SubstrateId.LABOR_COLLECTIVE_ACTION: {"labor"},
    SubstrateId.STATE_FORMATION: {"propose", "accept", "reject", "persuade"},
}


def _choice(payload):
    return ActionAttempt("choice", payload)


def _message(payload):
    return ActionAttempt("message", payload)


def _phase_action(obs: Observation, payload) -> ActionAttempt:
    return _message(payload) if obs.phase_label is PhaseLabel.COMMUNICATION else _choice(payload)


# --------------------------------------------------------------------------
# per-substrate building blocks


def _pub_cooperative_message(view):
    known, convention = view["known_closed"], view["last_gathering"]
    if known is None:
        return convention
    pub = convention if convention != known else min(p for p in range(view["pubs"]) if p != known)
    return {"pub": pub, "closed": known}


def _pub_declarations(events):
    declared = {e.speaker: e.payload["pub"] for e in events if e.kind == "declare"}
    reports = [e.payload["closed"] for e in events if e.kind == "declare"]
    return declared, reports


def _pub_cooperative_choice(obs):
    declared, reports = _pub_declarations(obs.public_events)
    target = coordination_target(declared, reports, obs.private_state["pubs"])
    return HOME if target is None else target


def _pub_selfish(view):
    pref, known = view["preferred_pub"], view["known_closed"]
    if known == pref:
        return min(p for p in range(view["pubs"]) if p != known)
    return pref


def _haggling_legal_range(view):
    if view["role"] == SELLER:
        return view["reservation"], view["value_range"][1]
    return view["cost_range"][0], view["reservation"]


def _haggling_clamp(view, price):
    lo, hi = _haggling_legal_range(view)
    step = view["granularity"]
    price = quantize(min(max(price, lo), hi), step)
    # snapping can step outside the range when a bound is off-grid
    if price < lo - 1e-9:
        price += step
    if price > hi + 1e-9:
        price -= step
    return price


def _haggling_better_or_equal(view, offer, reference):
    """Is ``offer`` at least as good for this seat as ``reference``?"""
    return offer >= reference - 1e-9 if view["role"] == SELLER else offer <= reference + 1e-9


def _haggling_acceptable(view, offer):
    return offer is not None and _haggling_better_or_equal(view, offer, view["reservation"])


def _haggling_fair(view):
    params = {"cost_range": view["cost_range"], "value_range": view["value_range"], "granularity": view["granularity"]}
    return _haggling_clamp(view, fair_price(view["role"], view["reservation"], params))


def _haggling_cooperative(view):
    if _haggling_acceptable(view, view["standing_offer"]):
        return _choice(H_ACCEPT)
    return _choice(_haggling_fair(view))


def _haggling_defect(view):
    anchor = view["value_range"][1] if view["role"] == SELLER else view["cost_range"][0]
    return _choice(_haggling_clamp(view, anchor))


def _sf_cooperative(view, cap: float = 1.0):
    standing, threshold = view["standing_burden"], view["threshold"]
    if standing is not None and standing <= cap + 1e-9:
        if standing <= threshold + 1e-9:
            return _choice(SF_ACCEPT)
        return _choice(PERSUADE)
    if threshold < 0.5 - 1e-9:
        return _choice(PERSUADE)
    return _choice(0.5)


def _sf_defect(view):
    return _choice(0.0)


# --------------------------------------------------------------------------
# policies


class ScriptedPolicy:
    """Base for scripted strategies: per-substrate handlers plus event memory."""

    strategy_id: BackgroundStrategyId
    substrates: frozenset = frozenset(SubstrateId)

    def __init__(self, substrate_id, seed: int = 0):
        self.substrate_id = SubstrateId(substrate_id)
        if self.substrate_id not in self.substrates:
            raise UnsupportedStrategyError(f"{self.strategy_id.value} is not defined for {self.substrate_id.value}")
        self.reset(seed)

    def reset(self, seed: int) -> None:
        self.rng = random.Random(seed)
        self.history: list[Event] = []

    def act(self, observation: Observation) -> ActionAttempt:
        self.history.extend(observation.public_events)
        view = observation.private_state
        if "to_move" in view and not view["to_move"]:
            return _choice(WAIT)
        return getattr(self, _HANDLERS[self.substrate_id])(observation)

    # helpers over remembered events
    def moves(self, seat_filter=None) -> list[Event]:
        kinds = _MOVE_EVENTS[self.substrate_id]
        return [e for e in self.history if e.kind in kinds and (seat_filter is None or seat_filter(e.speaker))]

    def last_round_others(self, me: int) -> list[Event]:
        moves = self.moves(lambda s: s is not None and s != me)
        if not moves:
            return []
        last = moves[-1].round
        return [e for e in moves if e.round == last]

    def counterpart_moves(self, me: int) -> list[Event]:
        return self.moves(lambda s: s == (me ^ 1))

    def last_toward_me(self, me: int) -> dict[int, str]:
        """Reality show: each opponent's most recent action against this seat."""
        last = {}
        for e in self.moves():
            if e.payload.get("target") == me:
                last[e.speaker] = e.payload["action"]
        return last


class NaiveAltruist(ScriptedPolicy):
    strategy_id = BackgroundStrategyId.NAIVE_ALTRUIST

    def reality_show(self, obs):
        return _phase_action(obs, C)

    def pub(self, obs):
        if obs.phase_label is PhaseLabel.COMMUNICATION:
            return _message(_pub_cooperative_message(obs.private_state))
        return _choice(_pub_cooperative_choice(obs))

    def haggling(self, obs):
        return _haggling_cooperative(obs.private_state)

    def labor(self, obs):
        return _phase_action(obs, WORK if obs.private_state["raise_fired"] else STRIKE)

    def state_formation(self, obs):
        return _sf_cooperative(obs.private_state)


class Defector(ScriptedPolicy):
    strategy_id = BackgroundStrategyId.DEFECTOR

    def reality_show(self, obs):
        return _phase_action(obs, D)

    def pub(self, obs):
        return _phase_action(obs, _pub_selfish(obs.private_state))

    def haggling(self, obs):
        return _haggling_defect(obs.private_state)

    def labor(self, obs):
        return _phase_action(obs, WORK)

    def state_formation(self, obs):
        return _sf_defect(obs.private_state)


class GrimTrigger(NaiveAltruist):
    """Cooperates until it sees a defection, then defects for good.

    In the reality show the grudge is held per opponent.
    """

    strategy_id = BackgroundStrategyId.GRIM_TRIGGER

    def triggered(self, me: int) -> bool:
        if self.substrate_id in (SubstrateId.HAGGLING, SubstrateId.STATE_FORMATION):
            moves = self.counterpart_moves(me)
        else:
            moves = self.moves(lambda s: s is not None and s != me)
        return any(not e.payload["cooperative"] for e in moves)

    def reality_show(self, obs):
        me = obs.seat
        enemies = {e.speaker for e in self.moves() if e.payload.get("target") == me and e.payload["action"] == D}
        if obs.phase_label is PhaseLabel.COMMUNICATION:
            return _message(D if enemies else C)
        return _choice({j: (D if j in enemies else C) for j in obs.private_state["opponents"]})

    def pub(self, obs):
        return Defector.pub(self, obs) if self.triggered(obs.seat) else super().pub(obs)

    def haggling(self, obs):
        return Defector.haggling(self, obs) if self.triggered(obs.seat) else super().haggling(obs)

    def labor(self, obs):
        return Defector.labor(self, obs) if self.triggered(obs.seat) else super().labor(obs)

    def state_formation(self, obs):
        return Defector.state_formation(self, obs) if self.triggered(obs.seat) else super().state_formation(obs)


class ConditionalCooperator(NaiveAltruist):
    """Tit-for-tat: opens cooperatively, then reciprocates.

    Per opponent in the reality show; against the share of others who
    cooperated last round in the group games; against the counterpart's
    concession size in haggling; against the counterpart's last move in
    state formation.
    """

    strategy_id = BackgroundStrategyId.CONDITIONAL_COOPERATOR

    def reciprocate(self, me: int) -> bool:
        last = self.last_round_others(me)
        if not last:
            return True
        return 2 * sum(e.payload["cooperative"] for e in last) >= len(last)

    def reality_show(self, obs):
        me = obs.seat
        last = self.last_toward_me(me)
        plan = {j: last.get(j, C) for j in obs.private_state["opponents"]}
        if obs.phase_label is PhaseLabel.COMMUNICATION:
            return _message(C if all(a == C for a in plan.values()) else D)
        return _choice(plan)

    def pub(self, obs):
        return super().pub(obs) if self.reciprocate(obs.seat) else Defector.pub(self, obs)

    def labor(self, obs):
        return super().labor(obs) if self.reciprocate(obs.seat) else Defector.labor(self, obs)

    def haggling(self, obs):
        view = obs.private_state
        standing, own, theirs = view["standing_offer"], view["own_offers"], view["counterpart_offers"]
        fair = _haggling_fair(view)
        if not own:
            if standing is not None and _haggling_better_or_equal(view, standing, fair):
                return _choice(H_ACCEPT)
            return _choice(fair)
        direction = 1.0 if view["role"] == SELLER else -1.0  # sign of a move that favours me
        last_move = self.counterpart_moves(obs.seat)[-1]
        if last_move.payload["cooperative"]:
            conceded = direction * (theirs[-1] - theirs[-2]) if len(theirs) >= 2 else 0.0
            concession = max(conceded, view["granularity"])
        else:
            concession = 0.0
        mine = own[-1] - direction * concession
        if standing is not None:
            # never concede past the counterpart's own offer
            mine = max(mine, standing) if view["role"] == SELLER else min(mine, standing)
        mine = _haggling_clamp(view, mine)
        if standing is not None and _haggling_better_or_equal(view, standing, mine):
            return _choice(H_ACCEPT)
        return _choice(mine)

    def state_formation(self, obs):
        moves = self.counterpart_moves(obs.seat)
        if moves and not moves[-1].payload["cooperative"]:
            return _sf_defect(obs.private_state)
        return _sf_cooperative(obs.private_state, cap=0.5)


class Stubborn(ScriptedPolicy):
    """Never concedes: repeats one anchor and accepts only offers at least as good."""

    strategy_id = BackgroundStrategyId.STUBBORN
    substrates = frozenset({SubstrateId.HAGGLING, SubstrateId.STATE_FORMATION})
    anchor_share = 0.3

    def haggling(self, obs):
        view = obs.private_state
        if view["role"] == SELLER:
            guess = sum(view["value_range"]) / 2
            anchor = view["reservation"] + 0.75 * (guess - view["reservation"])
        else:
            guess = sum(view["cost_range"]) / 2
            anchor = view["reservation"] - 0.75 * (view["reservation"] - guess)
        anchor = _haggling_clamp(view, anchor)
        standing = view["standing_offer"]
        if standing is not None and _haggling_better_or_equal(view, standing, anchor):
            return _choice(H_ACCEPT)
        return _choice(anchor)

    def state_formation(self, obs):
        view = obs.private_state
        standing = view["standing_burden"]
        if standing is not None and standing <= self.anchor_share + 1e-9:
            return _choice(SF_ACCEPT if standing <= view["threshold"] + 1e-9 else PERSUADE)
        return _choice(self.anchor_share)


class FairSplitter(ScriptedPolicy):
    """Proposes equal-surplus terms and accepts only (near-)equal splits.

    In haggling it infers the counterpart's reservation from its last offer,
    assuming that offer was itself an equal split against an estimate of
    this seat's reservation: the prior mean before this seat has spoken,
    the true value afterwards.
    """

    strategy_id = BackgroundStrategyId.FAIR_SPLITTER
    substrates = frozenset({SubstrateId.HAGGLING, SubstrateId.STATE_FORMATION})

    def haggling(self, obs):
        view = obs.private_state
        step = view["granularity"]
        mine_range = view["cost_range"] if view["role"] == SELLER else view["value_range"]
        their_range = view["value_range"] if view["role"] == SELLER else view["cost_range"]
        theirs = view["counterpart_offers"]
        if theirs:
            spoke_first = bool(view["own_offers"])
            assumed_mine = view["reservation"] if spoke_first else sum(mine_range) / 2
            estimate = min(max(2 * theirs[-1] - assumed_mine, their_range[0]), their_range[1])
        else:
            estimate = sum(their_range) / 2
        fair = _haggling_clamp(view, (view["reservation"] + estimate) / 2)
        standing = view["standing_offer"]
        if standing is not None and abs(standing - fair) <= step + 1e-9 and _haggling_acceptable(view, standing):
            return _choice(H_ACCEPT)
        return _choice(fair)

    def state_formation(self, obs):
        view = obs.private_state
        standing = view["standing_burden"]
        if standing is not None and standing <= 0.5 + 1e-9:
            return _choice(SF_ACCEPT if standing <= view["threshold"] + 1e-9 else PERSUADE)
        if view["threshold"] < 0.5 - 1e-9:
            return _choice(PERSUADE)
        return _choice(0.5)


class RandomPolicy(ScriptedPolicy):
    """Uniform over legal actions, from its own seeded stream."""

    strategy_id = BackgroundStrategyId.RANDOM

    def reality_show(self, obs):
        return _phase_action(obs, self.rng.choice((C, D)))

    def pub(self, obs):
        pubs = obs.private_state["pubs"]
        if obs.phase_label is PhaseLabel.COMMUNICATION:
            return _message(self.rng.randrange(pubs))
        return _choice(self.rng.choice([*range(pubs), HOME]))

    def haggling(self, obs):
        view = obs.private_state
        options = ["counter", WALK]
        if _haggling_acceptable(view, view["standing_offer"]):
            options.append(H_ACCEPT)
        pick = self.rng.choice(options)
        if pick != "counter":
            return _choice(pick)
        lo, hi = _haggling_legal_range(view)
        step = view["granularity"]
        first = int(-(-lo // step))
        last = int(hi // step)
        return _choice(_haggling_clamp(view, self.rng.randint(first, last) * step))

    def labor(self, obs):
        return _phase_action(obs, self.rng.choice((STRIKE, WORK)))

    def state_formation(self, obs):
        view = obs.private_state
        options = [PERSUADE, REJECT, "propose"]
        if view["standing_burden"] is not None:
            options.append(SF_ACCEPT)
        pick = self.rng.choice(options)
        if pick != "propose":
            return _choice(pick)
        steps = round(1.0 / view["share_step"])
        return _choice(round(self.rng.randint(0, steps) * view["share_step"], 10))


class RationalBaseline(ScriptedPolicy):
    """Myopic best response to co-players repeating their last observed moves.

    Before anything has been observed co-players are assumed cooperative.
    Ties go to the cooperative action.
    """

    strategy_id = BackgroundStrategyId.RATIONAL_BASELINE

    def reality_show(self, obs):
        view = obs.private_state
        last = self.last_toward_me(obs.seat)
        plan = {j: best_response(view["game"], last.get(j, C)) for j in view["opponents"]}
        if obs.phase_label is PhaseLabel.COMMUNICATION:
            return _message(C)
        return _choice(plan)

    def pub(self, obs):
        view = obs.private_state
        me, pubs = obs.seat, view["pubs"]
        friends = view["friends"]
        last = {e.speaker: e.payload["pub"] for e in self.last_round_others(me)}
        if obs.phase_label is PhaseLabel.COMMUNICATION:
            declared, reports, target = {}, [], None
        else:
            declared, reports = _pub_declarations(obs.public_events)
            target = coordination_target(declared, reports, pubs)
        closed = {p for p in reports if p is not None}
        if view["known_closed"] is not None:
            closed.add(view["known_closed"])

        def assumed(f):
            if f in last:
                return last[f]
            if target is not None:
                return target
            return view["last_gathering"]

        def value(p):
            if p in closed:
                return 0.0
            return (p == view["preferred_pub"]) + 2.0 * sum(assumed(f) == p for f in friends)

        best = max(range(pubs), key=lambda p: (value(p), p == target, -p))
        if best in closed and obs.phase_label is PhaseLabel.ACTION:
            return _choice(HOME)
        if obs.phase_label is PhaseLabel.COMMUNICATION:
            known = view["known_closed"]
            return _message(best if known is None else {"pub": best, "closed": known})
        return _choice(best)

    def haggling(self, obs):
        view = obs.private_state
        standing = view["standing_offer"]
        if _haggling_acceptable(view, standing):
            return _choice(H_ACCEPT)
        step = view["granularity"]
        res = view["reservation"]
        if view["role"] == SELLER:
            lo, hi = view["value_range"]
            counter_types = [lo + step * i for i in range(round((hi - lo) / step) + 1)]

            def expected(p):
                return (p - res) * sum(v >= p - 1e-9 for v in counter_types) / len(counter_types)

            grid = [p for p in counter_types if p >= res - 1e-9] or [view["value_range"][1]]
            best = max(grid, key=lambda p: (round(expected(p), 12), -p))
        else:
            lo, hi = view["cost_range"]
            counter_types = [lo + step * i for i in range(round((hi - lo) / step) + 1)]

            def expected(b):
                return (res - b) * sum(c <= b + 1e-9 for c in counter_types) / len(counter_types)

            grid = [b for b in counter_types if b <= res + 1e-9] or [view["cost_range"][0]]
            best = max(grid, key=lambda b: (round(expected(b), 12), b))
        return _choice(_haggling_clamp(view, best))

    def labor(self, obs):
        view = obs.private_state
        if view["raise_fired"]:
            return _phase_action(obs, WORK)
        last = self.last_round_others(obs.seat)
        if last:
            striking = sum(e.payload["action"] == STRIKE for e in last)
        else:
            striking = view["workers"] - 1
        needed = view["strikers_needed"]
        if striking >= needed:
            move = WORK
        elif striking + 1 >= needed and view["bonus"] * (view["days_left"] - 1) >= view["wage"]:
            move = STRIKE
        else:
            move = WORK
        return _phase_action(obs, move)

    def state_formation(self, obs):
        view = obs.private_state
        standing, threshold = view["standing_burden"], view["threshold"]
        if standing is not None:
            if standing <= threshold + 1e-9:
                return _choice(SF_ACCEPT)
            own_turns_left = (view["rounds_left"] + 1) // 2
            reachable = threshold + view["persuade_gain"] * max(own_turns_left - 1, 0)
            worth_it = view["value"] - view["burden_cost"] * standing - view["persuade_cost"] > -view["raid_loss"]
            if reachable >= standing - 1e-9 and worth_it:
                return _choice(PERSUADE)
        return _choice(0.0)


STRATEGIES: dict[BackgroundStrategyId, type[ScriptedPolicy]] = {
    cls.strategy_id: cls
    for cls in (NaiveAltruist, Defector, ConditionalCooperator, GrimTrigger, Stubborn, FairSplitter, RandomPolicy, RationalBaseline)
}


def compatible(strategy_id, substrate_id) -> bool:
    return SubstrateId(substrate_id) in STRATEGIES[BackgroundStrategyId(strategy_id)].substrates


def compatibility_matrix() -> dict[tuple[str, str], bool]:
    return {(s.value, sub.value): compatible(s, sub) for s in BackgroundStrategyId for sub in SubstrateId}


def make_background_policy(strategy_id, substrate_id, seed: int = 0) -> ScriptedPolicy:
    try:
        cls = STRATEGIES[BackgroundStrategyId(strategy_id)]
    except ValueError:
        raise UnsupportedStrategyError(f"unknown strategy {strategy_id!r}") from None
    return cls(substrate_id, seed)


def rational_baseline_policy(substrate_id, seed: int = 0) -> RationalBaseline:
    return RationalBaseline(substrate_id, seed)
