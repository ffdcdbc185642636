import copy
import random

import pytest

from coop_arena.core import ActionAttempt, Mode, PhaseLabel, compose_population
from coop_arena.substrates import (
    SUBSTRATES,
    TABLES,
    GameKind,
    IllegalActionError,
    PayoffTable,
    check_scenario,
    get_substrate,
    initial_state,
    is_cooperative,
    make_scenario,
    matrix_payoff,
    step,
    theoretical_bounds,
)
from coop_arena.substrates.haggling import ACCEPT, WALK
from coop_arena.substrates.labor import STRIKE, WORK
from coop_arena.substrates.matrix import C, D

choice = lambda p: ActionAttempt("choice", p)  # noqa: E731
message = lambda p: ActionAttempt("message", p)  # noqa: E731


def test_matrix_examples():
    assert matrix_payoff(GameKind.PD, C, C) == (3, 3)
    assert matrix_payoff(GameKind.PD, D, C) == (5, 0)
    assert matrix_payoff(GameKind.STAG_HUNT, C, C) == (4, 4)
    assert matrix_payoff(GameKind.STAG_HUNT, D, D) == (2, 2)
    assert matrix_payoff(GameKind.CHICKEN, D, D) == (0, 0)
    chicken = TABLES[GameKind.CHICKEN]
    assert all(sum(chicken.payoff(a, b)) > 0 for a in (C, D) for b in (C, D) if (a, b) != (D, D))


@pytest.mark.parametrize("kind", list(GameKind))
def test_matrix_symmetry(kind):
    for a in (C, D):
        for b in (C, D):
            assert matrix_payoff(kind, a, b)[0] == matrix_payoff(kind, b, a)[1]


def test_payoff_orderings_enforced():
    with pytest.raises(ValueError):
        PayoffTable.from_trps(GameKind.PD, temptation=3, reward=5, punishment=1, sucker=0)
    with pytest.raises(ValueError):
        PayoffTable.from_trps(GameKind.STAG_HUNT, temptation=5, reward=4, punishment=2, sucker=0)


def test_initial_state_deterministic():
    spec = make_scenario("h", "Haggling", "visitor", "Defector")
    assert initial_state(spec, 7) == initial_state(spec, 7)


def test_pub_zero_closure_probability():
    spec = make_scenario("p", "PubCoordination", "visitor", "Defector", params={"closure_prob": 0.0})
    rng = random.Random(0)
    state = initial_state(spec, 1)
    sub = get_substrate("PubCoordination")
    while not state.done:
        assert state.data["closed"] is None
        kind = "message" if state.phase is PhaseLabel.COMMUNICATION else "choice"
        state, _, events = step(state, {i: ActionAttempt(kind, 0) for i in range(6)}, rng)
        assert not any(e.kind == "closure" for e in events)
    assert sub.check_population(6) is None


def test_haggling_value_exceeds_cost_over_many_seeds():
    spec = make_scenario("h", "Haggling", "visitor", "Defector")
    for seed in range(10_000):
        m = initial_state(spec, seed).data["markets"][0]
        assert m["value"] > m["cost"]
        assert 2 <= m["cost"] <= 6 and 8 <= m["value"] <= 12
        assert m["cost"] % 0.25 == 0 and m["value"] % 0.25 == 0


def test_reality_show_cc_pd_round():
    spec = make_scenario("r", "RealityShow", "visitor", "Defector", population_size=2, params={"games": ["PD"]})
    state = initial_state(spec, 0)
    rng = random.Random(0)
    state, _, _ = step(state, {0: message(C), 1: message(C)}, rng)
    state, _, _ = step(state, {0: choice(C), 1: choice(C)}, rng)
    assert state.scores == [3.0, 3.0]


def test_reality_show_per_opponent_mapping():
    spec = make_scenario("r", "RealityShow", "visitor", "Defector", params={"games": ["PD"], "communication": False})
    state = initial_state(spec, 0)
    joint = {0: choice({1: D, 2: C, 3: C}), 1: choice(C), 2: choice(C), 3: choice(C)}
    state, _, _ = step(state, joint, random.Random(0))
    assert state.scores == [11.0, 6.0, 9.0, 9.0]


def test_haggling_accept_splits_surplus():
    spec = make_scenario("h", "Haggling", "visitor", "Defector")
    state = initial_state(spec, 3)
    m = state.data["markets"][0]
    price = 7.0
    rng = random.Random(0)
    state, _, _ = step(state, {0: choice(price), 1: choice("wait")}, rng)
    state, _, events = step(state, {0: choice("wait"), 1: choice(ACCEPT)}, rng)
    assert state.done
    assert state.scores == [price - m["cost"], m["value"] - price]
    assert events[-1].kind == "accept"


def test_haggling_rejects_negative_surplus_offer():
    spec = make_scenario("h", "Haggling", "visitor", "Defector")
    state = initial_state(spec, 3)
    cost = state.data["markets"][0]["cost"]
    with pytest.raises(IllegalActionError):
        step(state, {0: choice(cost - 0.25), 1: choice("wait")}, random.Random(0))


def test_labor_below_threshold_no_raise():
    spec = make_scenario("l", "LaborCollectiveAction", "visitor", "Defector", params={"communication": False})
    state = initial_state(spec, 0)
    joint = {i: choice(STRIKE if i < 2 else WORK) for i in range(6)}
    state, _, events = step(state, joint, random.Random(0))
    assert not any(e.kind == "wage_raise" for e in events)
    joint = {i: choice(STRIKE if i < 3 else WORK) for i in range(6)}
    state, _, events = step(state, joint, random.Random(0))
    assert any(e.kind == "wage_raise" for e in events)
    state, _, _ = step(state, {i: choice(WORK) for i in range(6)}, random.Random(0))
    assert state.scores[0] == pytest.approx(1.5)  # struck twice, then wage plus bonus
    assert state.scores[5] == pytest.approx(3.5)


def test_state_formation_alliance_and_raid():
    spec = make_scenario("sf", "StateFormation", "visitor", "Defector", params={"thresholds": [0.5]})
    rng = random.Random(0)
    state = initial_state(spec, 0)
    state, _, _ = step(state, {0: choice(0.5), 1: choice("wait")}, rng)
    state, _, events = step(state, {0: choice("wait"), 1: choice("accept")}, rng)
    assert state.done and state.scores == [2.0, 2.0]
    state = initial_state(spec, 0)
    while not state.done:
        mover = state.round % 2
        state, _, _ = step(state, {mover: choice("reject"), 1 - mover: choice("wait")}, rng)
    assert state.scores == [-2.0, -2.0]


def test_theoretical_bound_examples():
    pd = make_scenario("r", "RealityShow", "visitor", "Defector", params={"games": ["PD"]})
    assert theoretical_bounds(pd) == (0.0, 150.0)
    assert theoretical_bounds(make_scenario("h", "Haggling", "visitor", "Defector")) == (0.0, 10.0)
    assert theoretical_bounds(make_scenario("l", "LaborCollectiveAction", "visitor", "Defector")) == (0.0, 11.5)
    default = make_scenario("r", "RealityShow", "visitor", "Defector")
    assert theoretical_bounds(default) == (0.0, 123.0)  # 4 PD, 3 Chicken, 3 StagHunt rounds x 3 opponents


def test_cooperation_labels():
    rs = make_scenario("r", "RealityShow", "visitor", "Defector")
    state = initial_state(rs, 0)
    assert is_cooperative("RealityShow", PhaseLabel.ACTION, choice(C), state, 0)
    assert not is_cooperative("RealityShow", PhaseLabel.ACTION, choice(D), state, 0)

    hag = make_scenario("h", "Haggling", "visitor", "Defector")
    state = initial_state(hag, 3)
    rng = random.Random(0)
    state, _, _ = step(state, {0: choice(11.0), 1: choice("wait")}, rng)
    state, _, _ = step(state, {0: choice("wait"), 1: choice(3.0)}, rng)
    assert is_cooperative("Haggling", PhaseLabel.ACTION, choice(10.0), state, 0)
    assert not is_cooperative("Haggling", PhaseLabel.ACTION, choice(11.0), state, 0)
    assert not is_cooperative("Haggling", PhaseLabel.ACTION, choice(WALK), state, 0)

    pub = make_scenario("p", "PubCoordination", "visitor", "Defector", params={"closure_prob": 1.0})
    state = initial_state(pub, 0)
    informed = state.data["informed"][0]
    closed = state.data["closed"]
    lie = message({"pub": closed})
    assert not is_cooperative("PubCoordination", PhaseLabel.COMMUNICATION, lie, state, informed)
    honest = message({"pub": 1 - closed, "closed": closed})
    assert is_cooperative("PubCoordination", PhaseLabel.COMMUNICATION, honest, state, informed)


def test_horizon_zero_is_done():
    for sid in SUBSTRATES:
        spec = make_scenario("z", sid, "visitor", "Defector", horizon=0)
        state = initial_state(spec, 0)
        assert state.done and state.phase is PhaseLabel.OUTCOME and set(state.scores) == {0.0}


def test_step_does_not_mutate_and_is_deterministic():
    spec = make_scenario("p", "PubCoordination", "visitor", "Defector", params={"closure_prob": 0.5})
    state = initial_state(spec, 5)
    before = copy.deepcopy(state)
    joint = {i: message(i % 2) for i in range(6)}
    a = step(state, joint, random.Random(9))
    b = step(state, joint, random.Random(9))
    assert state == before
    assert a[0] == b[0] and a[2] == b[2]


def test_check_scenario_odd_seats():
    assert check_scenario(make_scenario("h", "Haggling", "visitor", "Defector", population_size=3)) == ["seat-count-unsupported"]
    assert check_scenario(make_scenario("h", "Haggling", "resident", "Defector", population_size=4)) == []


def test_make_scenario_defaults():
    spec = make_scenario("x", "RealityShow", Mode.RESIDENT, "GrimTrigger")
    assert (spec.population_size, spec.background_count, spec.horizon) == (4, 1, 10)
    assert (spec.theoretical_min, spec.theoretical_max) == (0.0, 123.0)
    assert {t.value for t in make_scenario("h", "Haggling", "visitor", "Defector").tags} == {"negotiation", "calculation"}
