from __future__ import annotations

from collections import Counter

from ..core import ActionAttempt, Event, PhaseLabel, ScenarioSpec, SubstrateId, Tag
from .base import ActionGrammar, Substrate, expect_kind

HOME = "home"


def coordination_target(declared: dict[int, int], reported_closed, n_pubs: int) -> int | None:
    """Most-declared pub among those nobody reported closed (lowest index on ties)."""
    excluded = {p for p in reported_closed if p is not None}
    open_pubs = [p for p in range(n_pubs) if p not in excluded]
    if not open_pubs:
        return None
    counts = Counter(p for p in declared.values() if p in open_pubs)
    return max(open_pubs, key=lambda p: (counts[p], -p))


def ring_friends(seat: int, n: int) -> list[int]:
    return sorted({(seat - 1) % n, (seat + 1) % n} - {seat})


def parse_declaration(payload):
    """Return ``(pub, reported_closed)`` or ``None`` for a malformed message."""
    if isinstance(payload, bool):
        return None
    if isinstance(payload, int):
        return payload, None
    if isinstance(payload, dict) and isinstance(payload.get("pub"), int) and not isinstance(payload.get("pub"), bool):
        closed = payload.get("closed")
        if closed is not None and (isinstance(closed, bool) or not isinstance(closed, int)):
            return None
        return payload["pub"], closed
    return None


class PubCoordination(Substrate):
    """Friends on a ring pick pubs; one pub may close each round.

    A closure is revealed privately to a few seats before the message phase
    and publicly after attendance. Attending a closed pub or staying home
    scores nothing for the round.
    """

    id = SubstrateId.PUB_COORDINATION
    tags = frozenset({Tag.COORDINATION, Tag.PERSUASION, Tag.HIDDEN_INFORMATION, Tag.SOCIAL_NETWORKS})
    default_seats = 6
    default_horizon = 5
    has_communication = True
    defaults = {
        "pubs": 2,
        "closure_prob": 0.2,
        "informed": 2,
        "preference_bonus": 1.0,
        "friend_bonus": 2.0,
        "communication": True,
    }

    def theoretical_bounds(self, spec: ScenarioSpec):
        params = self.params(spec)
        friends = len(ring_friends(0, spec.population_size))
        per_round = params["preference_bonus"] + params["friend_bonus"] * friends
        return 0.0, float(per_round * spec.horizon)

    def setup(self, state, rng):
        n, pubs = state.n_seats, state.params["pubs"]
        prefs = [i % pubs for i in range(n)]
        rng.shuffle(prefs)
        state.data.update(
            preferences=prefs,
            declared={},
            reports={},
            last_gathering=0,
            closed=None,
            informed=[],
        )
        if not state.done:
            self._draw_closure(state, rng)

    def _draw_closure(self, state, rng):
        # At most one pub closes per round so the cooperative profile never scores zero.
        state.data["closed"] = None
        state.data["informed"] = []
        if rng.random() < state.params["closure_prob"]:
            state.data["closed"] = rng.randrange(state.params["pubs"])
            k = min(state.params["informed"], state.n_seats)
            state.data["informed"] = sorted(rng.sample(range(state.n_seats), k))

    def known_closed(self, state, seat):
        return state.data["closed"] if seat in state.data["informed"] else None

    def check(self, state, seat, action):
        pubs = state.params["pubs"]
        if state.phase is PhaseLabel.COMMUNICATION:
            problem = expect_kind(action, "message")
            if problem:
                return problem
            parsed = parse_declaration(action.payload)
            if parsed is None or not 0 <= parsed[0] < pubs or (parsed[1] is not None and not 0 <= parsed[1] < pubs):
                return "message must declare a pub index and optionally a closed pub index"
            return None
        problem = expect_kind(action, "choice")
        if problem:
            return problem
        p = action.payload
        if p == HOME or (isinstance(p, int) and not isinstance(p, bool) and 0 <= p < pubs):
            return None
        return f"choice must be a pub index in [0, {pubs}) or {HOME!r}"

    def target(self, state):
        return coordination_target(state.data["declared"], state.data["reports"].values(), state.params["pubs"])

    def advance(self, state, joint_action, rng):
        rnd, n, data = state.round, state.n_seats, state.data
        events = []
        if state.phase is PhaseLabel.COMMUNICATION:
            data["declared"], data["reports"] = {}, {}
            for seat in range(n):
                coop = self.is_cooperative(PhaseLabel.COMMUNICATION, joint_action[seat], state, seat)
                pub, closed = parse_declaration(joint_action[seat].payload)
                data["declared"][seat] = pub
                data["reports"][seat] = closed
                events.append(Event(rnd, seat, "declare", {"pub": pub, "closed": closed, "cooperative": coop}))
            self._next_phase(state)
            return events

        choices = {seat: joint_action[seat].payload for seat in range(n)}
        labels = {seat: self.is_cooperative(PhaseLabel.ACTION, joint_action[seat], state, seat) for seat in range(n)}
        for seat in range(n):
            pub = choices[seat]
            payoff = 0.0
            if pub != HOME and pub != data["closed"]:
                if data["preferences"][seat] == pub:
                    payoff += state.params["preference_bonus"]
                together = sum(1 for f in ring_friends(seat, n) if choices[f] == pub)
                payoff += state.params["friend_bonus"] * together
            state.scores[seat] += payoff
            events.append(Event(rnd, seat, "attend", {"pub": pub, "cooperative": labels[seat], "payoff": payoff}))
        if data["closed"] is not None:
            events.append(Event(rnd, None, "closure", {"pub": data["closed"]}))
        attended = Counter(p for p in choices.values() if p != HOME and p != data["closed"])
        if attended:
            data["last_gathering"] = max(attended, key=lambda p: (attended[p], -p))
        self._next_phase(state)
        if not state.done:
            self._draw_closure(state, rng)
        return events

    def private_view(self, state, seat):
        return {
            "seat": seat,
            "pubs": state.params["pubs"],
            "preferred_pub": state.data["preferences"][seat],
            "friends": ring_friends(seat, state.n_seats),
            "known_closed": None if state.done else self.known_closed(state, seat),
            "last_gathering": state.data["last_gathering"],
            "rounds_left": state.horizon - state.round,
            "score": state.scores[seat],
        }

    def passive_action(self, obs):
        if obs.phase_label is PhaseLabel.COMMUNICATION:
            return ActionAttempt("message", obs.private_state.get("preferred_pub", 0))
        return ActionAttempt("choice", HOME)

    def is_cooperative(self, phase_label, action, state, seat):
        known = self.known_closed(state, seat)
        if phase_label is PhaseLabel.COMMUNICATION:
            parsed = parse_declaration(action.payload)
            if parsed is None:
                return False
            pub, closed = parsed
            if closed is not None and closed != state.data["closed"]:
                return False  # false alarm
            if known is not None and (pub == known or closed != known):
                return False  # hides or contradicts a known closure
            return True
        target = self.target(state)
        if target is None:
            return action.payload == HOME
        return action.payload == target

    def grammar(self, obs):
        pubs = obs.private_state.get("pubs", 2)
        if obs.phase_label is PhaseLabel.COMMUNICATION:
            return ActionGrammar(
                "message",
                f"Announce which pub (0-{pubs - 1}) you plan to visit, e.g. 'pub 1'. "
                "If you know a pub is closed, add 'closed N'.",
                numeric=(0, pubs - 1),
                integer=True,
                extras={"closed": r"closed\D{0,12}?(\d+)"},
                numeric_key="pub",
            )
        return ActionGrammar(
            "choice",
            f"Choose the pub (0-{pubs - 1}) you go to, or HOME.",
            tokens={"home": HOME},
            numeric=(0, pubs - 1),
            integer=True,
        )
