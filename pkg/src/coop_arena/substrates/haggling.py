from __future__ import annotations

from ..core import ActionAttempt, Event, PhaseLabel, ScenarioSpec, SubstrateId, Tag
from .base import ActionGrammar, Substrate, as_number, expect_kind, on_grid, quantize

ACCEPT, WALK, WAIT = "accept", "walk", "wait"
SELLER, BUYER = "seller", "buyer"


def draw_on_grid(rng, lo: float, hi: float, step: float) -> float:
    return round(lo + step * rng.randint(0, round((hi - lo) / step)), 10)


def fair_price(role: str, reservation: float, params) -> float:
    """Equal-surplus price against the counterpart's expected reservation."""
    if role == SELLER:
        guess = sum(params["value_range"]) / 2
    else:
        guess = sum(params["cost_range"]) / 2
    return quantize((reservation + guess) / 2, params["granularity"])


class Haggling(Substrate):
    """Alternating-offers price bargaining between a seller and a buyer.

    Seats pair up into independent markets (seller = even seat, buyer = the
    next odd seat). The seller moves on even rounds and the buyer on odd
    rounds; the mover accepts the standing offer, counters with a price, or
    walks away. The other seat waits. No deal by the horizon pays nothing.
    """

    id = SubstrateId.HAGGLING
    tags = frozenset({Tag.NEGOTIATION, Tag.CALCULATION})
    default_seats = 2
    default_horizon = 6
    defaults = {"cost_range": [2.0, 6.0], "value_range": [8.0, 12.0], "granularity": 0.25}

    def check_population(self, n):
        if n < 2 or n % 2:
            return "seat-count-unsupported"
        return None

    def theoretical_bounds(self, spec: ScenarioSpec):
        params = self.params(spec)
        return 0.0, float(params["value_range"][1] - params["cost_range"][0])

    def setup(self, state, rng):
        p = state.params
        markets = []
        for _ in range(state.n_seats // 2):
            cost = draw_on_grid(rng, *p["cost_range"], p["granularity"])
            value = draw_on_grid(rng, *p["value_range"], p["granularity"])
            markets.append({"cost": cost, "value": value, "offers": [], "status": "open", "price": None})
        state.data["markets"] = markets

    @staticmethod
    def role(seat: int) -> str:
        return SELLER if seat % 2 == 0 else BUYER

    def to_move(self, state, seat) -> bool:
        market = state.data["markets"][seat // 2]
        return not state.done and market["status"] == "open" and state.round % 2 == seat % 2

    def reservation(self, state, seat) -> float:
        market = state.data["markets"][seat // 2]
        return market["cost"] if self.role(seat) == SELLER else market["value"]

    def standing(self, state, seat):
        """Counterpart's latest offer, if it is the most recent one in the market."""
        offers = state.data["markets"][seat // 2]["offers"]
        if offers and offers[-1][0] != seat:
            return offers[-1][1]
        return None

    def surplus(self, state, seat, price: float) -> float:
        res = self.reservation(state, seat)
        return price - res if self.role(seat) == SELLER else res - price

    def check(self, state, seat, action):
        if not self.to_move(state, seat):
            return None  # non-movers' actions are ignored
        problem = expect_kind(action, "choice")
        if problem:
            return problem
        payload = action.payload
        if payload == WALK:
            return None
        if payload == ACCEPT:
            price = self.standing(state, seat)
            if price is None:
                return "no standing offer to accept"
            if self.surplus(state, seat, price) < -1e-9:
                return "accepting would give negative surplus"
            return None
        price = as_number(payload)
        if price is None:
            return "choice must be 'accept', 'walk' or a numeric price"
        p = state.params
        if not on_grid(price, p["granularity"]):
            return f"price must be a multiple of {p['granularity']}"
        lo, hi = (self.reservation(state, seat), p["value_range"][1]) if self.role(seat) == SELLER else (p["cost_range"][0], self.reservation(state, seat))
        if not lo - 1e-9 <= price <= hi + 1e-9:
            return f"price must lie in [{lo}, {hi}]"
        return None

    def advance(self, state, joint_action, rng):
        rnd = state.round
        events = []
        for m, market in enumerate(state.data["markets"]):
            if market["status"] != "open":
                continue
            seat = 2 * m + rnd % 2
            action = joint_action[seat]
            coop = self.is_cooperative(PhaseLabel.ACTION, action, state, seat)
            if action.payload == WALK:
                market["status"] = "walk"
                events.append(Event(rnd, seat, "walk", {"market": m, "cooperative": coop}))
            elif action.payload == ACCEPT:
                price = self.standing(state, seat)
                market["status"], market["price"] = "deal", price
                seller, buyer = 2 * m, 2 * m + 1
                state.scores[seller] += price - market["cost"]
                state.scores[buyer] += market["value"] - price
                events.append(Event(rnd, seat, "accept", {"market": m, "price": price, "cooperative": coop}))
            else:
                price = float(action.payload)
                market["offers"].append((seat, price))
                events.append(Event(rnd, seat, "offer", {"market": m, "price": price, "cooperative": coop}))
        state.round += 1
        if state.round >= state.horizon or all(mk["status"] != "open" for mk in state.data["markets"]):
            state.done = True
        return events

    def private_view(self, state, seat):
        market = state.data["markets"][seat // 2]
        own = [p for s, p in market["offers"] if s == seat]
        theirs = [p for s, p in market["offers"] if s != seat]
        p = state.params
        return {
            "seat": seat,
            "market": seat // 2,
            "role": self.role(seat),
            "reservation": self.reservation(state, seat),
            "cost_range": list(p["cost_range"]),
            "value_range": list(p["value_range"]),
            "granularity": p["granularity"],
            "to_move": self.to_move(state, seat),
            "standing_offer": self.standing(state, seat),
            "own_offers": own,
            "counterpart_offers": theirs,
            "status": market["status"],
            "rounds_left": state.horizon - state.round,
            "score": state.scores[seat],
        }

    def passive_action(self, obs):
        view = obs.private_state
        if not view.get("to_move"):
            return ActionAttempt("choice", WAIT)
        if view["own_offers"]:
            return ActionAttempt("choice", view["own_offers"][-1])
        return ActionAttempt("choice", view["reservation"])

    def is_cooperative(self, phase_label, action, state, seat):
        if not self.to_move(state, seat):
            return True
        payload = action.payload
        if payload == ACCEPT:
            return True
        if payload == WALK:
            return False
        price = as_number(payload)
        if price is None:
            return False
        market = state.data["markets"][seat // 2]
        own = [p for s, p in market["offers"] if s == seat]
        theirs = [p for s, p in market["offers"] if s != seat]
        if own and theirs:
            return abs(price - theirs[-1]) < abs(own[-1] - theirs[-1]) - 1e-9
        fair = fair_price(self.role(seat), self.reservation(state, seat), state.params)
        return price <= fair + 1e-9 if self.role(seat) == SELLER else price >= fair - 1e-9

    def grammar(self, obs):
        view = obs.private_state
        tokens = {"accept": ACCEPT, "deal": ACCEPT, "walk": WALK, "leave": WALK}
        if view.get("standing_offer") is None:
            tokens = {"walk": WALK, "leave": WALK}
        if view.get("role") == SELLER:
            lo, hi = view["reservation"], view["value_range"][1]
        else:
            lo, hi = view["cost_range"][0], view["reservation"]
        return ActionGrammar(
            "choice",
            f"Answer ACCEPT to take the standing offer, WALK to leave, or a price between {lo} and {hi} "
            f"in steps of {view['granularity']} to counter.",
            tokens,
            numeric=(lo, hi),
            granularity=view["granularity"],
        )
