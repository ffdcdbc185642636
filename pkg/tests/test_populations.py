import itertools
import random

import pytest

from coop_arena.core import ActionAttempt, PhaseLabel, compose_population
from coop_arena.populations import (
    STRATEGIES,
    BackgroundStrategyId,
    UnsupportedStrategyError,
    compatibility_matrix,
    compatible,
    make_background_policy,
    rational_baseline_policy,
)
from coop_arena.substrates import SUBSTRATES, get_substrate, initial_state, make_scenario, step
from coop_arena.substrates.matrix import C, D
from coop_arena.tournament import run_episode

ALL_SUBSTRATES = [s.value for s in SUBSTRATES]


def episode(sub, focal, background, mode="visitor", n=None, params=None, run=0, seed=1, horizon=None):
    spec = make_scenario("t", sub, mode, background, population_size=n, params=params, horizon=horizon)
    seats = compose_population(spec, lambda: make_background_policy(focal, sub),
                               lambda: make_background_policy(background, sub), seed)
    return spec, seats, run_episode(spec, seats, run)


def moves(result, kinds):
    return [e for e in result.trajectory if e.kind in kinds]


def test_compatibility_matrix_shape():
    matrix = compatibility_matrix()
    assert len(matrix) == len(BackgroundStrategyId) * len(SUBSTRATES)
    assert not compatible("Stubborn", "RealityShow")
    assert compatible("FairSplitter", "Haggling")
    with pytest.raises(UnsupportedStrategyError):
        make_background_policy("Stubborn", "LaborCollectiveAction")
    with pytest.raises(UnsupportedStrategyError):
        make_background_policy("Saint", "Haggling")


@pytest.mark.parametrize("sub", ALL_SUBSTRATES)
def test_every_compatible_pair_completes_without_rejections(sub):
    """Exhaustive smoke test over the compatibility matrix, both modes."""
    for mode in ("visitor", "resident"):
        n = 4 if mode == "resident" and sub in ("Haggling", "StateFormation") else None
        for f, b in itertools.product(STRATEGIES, STRATEGIES):
            if not (compatible(f, sub) and compatible(b, sub)):
                continue
            for run in range(2):
                spec, _, res = episode(sub, f, b.value, mode, n, run=run)
                bad = [e for e in res.trajectory if e.kind in ("rejected", "policy_error")]
                assert not bad, (sub, mode, f, b, bad[:1])
                for raw in res.raw_scores():
                    assert spec.theoretical_min - 1e-9 <= raw <= spec.theoretical_max + 1e-9


def test_naive_altruist_plays_c_in_reality_show():
    _, seats, res = episode("RealityShow", "NaiveAltruist", "Defector")
    me = seats.focal_seats()[0]
    mine = [e for e in moves(res, {"play"}) if e.speaker == me]
    assert len(mine) == 30 and all(e.payload["action"] == C for e in mine)


def test_grim_trigger_holds_grudge_per_opponent():
    spec = make_scenario("g", "RealityShow", "visitor", "NaiveAltruist", params={"games": ["PD"]})
    seats = compose_population(spec, lambda: make_background_policy("GrimTrigger", "RealityShow"),
                               lambda: make_background_policy("NaiveAltruist", "RealityShow"), 0)
    grim = seats.focal_seats()[0]
    # Swap one background altruist for a defector to trigger a single grudge.
    defector_seat = seats.background_seats()[0]
    seats = type(seats)(tuple(
        type(s)(s.index, make_background_policy("Defector", "RealityShow"), s.role, "d") if s.index == defector_seat else s
        for s in seats.seats))
    res = run_episode(spec, seats, 0)
    plays = [e for e in moves(res, {"play"}) if e.speaker == grim]
    first = [e for e in plays if e.round == 0]
    assert all(e.payload["action"] == C for e in first)
    later = [e for e in plays if e.round > 0]
    assert all(e.payload["action"] == (D if e.payload["target"] == defector_seat else C) for e in later)


def test_stubborn_haggler_repeats_opening_offer():
    for run in range(5):
        spec, seats, res = episode("Haggling", "Stubborn", "Defector", run=run)
        me = seats.focal_seats()[0]
        offers = [e.payload["price"] for e in moves(res, {"offer"}) if e.speaker == me]
        assert len(set(offers)) <= 1
        assert not [e for e in moves(res, {"accept"}) if e.speaker == me]  # defector never concedes to it


def test_fair_splitter_opening_offer_is_midpoint_estimate():
    sub = get_substrate("Haggling")
    spec = make_scenario("h", "Haggling", "visitor", "Defector")
    state = initial_state(spec, 11)
    policy = make_background_policy("FairSplitter", "Haggling")
    action = policy.act(sub.observe(state, 0))
    cost = state.data["markets"][0]["cost"]
    expected = round(((cost + 10.0) / 2) / 0.25 + 1e-9) * 0.25  # prior mean of v is 10
    assert action == ActionAttempt("choice", pytest.approx(expected))


def test_fair_splitters_deal_near_surplus_midpoint():
    """Analytic trace: each side ends within two grid steps of (v - c) / 2."""
    for run in range(20):
        _, _, res = episode("Haggling", "FairSplitter", "FairSplitter", run=run)
        deals = moves(res, {"accept"})
        assert deals, run
        s, b = res.raw_scores()
        surplus = s + b
        assert abs(s - surplus / 2) <= 0.5 and abs(b - surplus / 2) <= 0.5


def test_reality_show_all_altruists_sum_r_values():
    _, _, res = episode("RealityShow", "NaiveAltruist", "NaiveAltruist")
    # rounds cycle PD, Chicken, StagHunt: 4*3 + 3*2 + 3*4 = 30 per opponent, three opponents
    assert res.raw_scores() == [90.0] * 4


@pytest.mark.parametrize("focal, per_opponent", [("ConditionalCooperator", 30.0), ("Defector", 14.0), ("NaiveAltruist", 30.0)])
def test_pd_against_grim_trigger(focal, per_opponent):
    _, seats, res = episode("RealityShow", focal, "GrimTrigger", params={"games": ["PD"]})
    me = seats.focal_seats()[0]
    assert res.seats[me].raw / 3 == per_opponent


@pytest.mark.parametrize("sub", ALL_SUBSTRATES)
@pytest.mark.parametrize("strategy", ["GrimTrigger", "ConditionalCooperator"])
def test_no_false_triggers_among_altruists(sub, strategy):
    n = 4 if sub in ("Haggling", "StateFormation") else None
    for run in range(3):
        _, _, res = episode(sub, strategy, "NaiveAltruist", "resident", n, run=run)
        labelled = [e for e in res.trajectory if isinstance(e.payload, dict) and "cooperative" in e.payload]
        assert labelled and all(e.payload["cooperative"] for e in labelled), sub


def test_conditional_cooperator_answers_c_with_c():
    sub = get_substrate("RealityShow")
    spec = make_scenario("r", "RealityShow", "visitor", "NaiveAltruist", params={"games": ["PD"], "communication": False})
    state = initial_state(spec, 0)
    state, obs, _ = step(state, {i: ActionAttempt("choice", C) for i in range(4)}, random.Random(0))
    policy = make_background_policy("ConditionalCooperator", "RealityShow")
    assert policy.act(obs[0]) == ActionAttempt("choice", {1: C, 2: C, 3: C})


def _after_all_c(game):
    spec = make_scenario("r", "RealityShow", "visitor", "NaiveAltruist", params={"games": [game], "communication": False})
    state = initial_state(spec, 0)
    state, obs, _ = step(state, {i: ActionAttempt("choice", C) for i in range(4)}, random.Random(0))
    return obs[0]


def test_rational_baseline_defects_in_pd_after_all_c():
    assert rational_baseline_policy("RealityShow").act(_after_all_c("PD")) == ActionAttempt("choice", {1: D, 2: D, 3: D})


def test_rational_baseline_cooperates_in_stag_hunt_after_all_c():
    assert rational_baseline_policy("RealityShow").act(_after_all_c("StagHunt")) == ActionAttempt("choice", {1: C, 2: C, 3: C})


def test_rational_baseline_buyer_accepts_profitable_last_offer():
    spec = make_scenario("h", "Haggling", "visitor", "Defector", horizon=2)
    state = initial_state(spec, 4)
    value = state.data["markets"][0]["value"]
    state, obs, _ = step(state, {0: ActionAttempt("choice", value - 1.0), 1: ActionAttempt("choice", "wait")}, random.Random(0))
    assert obs[1].private_state["rounds_left"] == 1
    assert rational_baseline_policy("Haggling").act(obs[1]) == ActionAttempt("choice", "accept")


def test_random_policy_is_seeded():
    def trace(seed):
        _, _, res = episode("RealityShow", "Random", "Random", seed=seed)
        return [(e.speaker, e.payload.get("action")) for e in moves(res, {"play"})]

    assert trace(3) == trace(3)
    p, q = make_background_policy("Random", "LaborCollectiveAction", 5), make_background_policy("Random", "LaborCollectiveAction", 5)
    spec = make_scenario("l", "LaborCollectiveAction", "visitor", "Random", params={"communication": False})
    obs = get_substrate("LaborCollectiveAction").observe(initial_state(spec, 0), 0)
    assert [p.act(obs) for _ in range(20)] == [q.act(obs) for _ in range(20)]


def _total(sub, strategy, runs=10):
    totals = []
    for run in range(runs):
        spec = make_scenario("c", sub, "visitor", strategy)
        seats = compose_population(spec, lambda: make_background_policy(strategy, sub),
                                   lambda: make_background_policy(strategy, sub), run)
        totals.append(sum(run_episode(spec, seats, run).raw_scores()))
    return totals


@pytest.mark.parametrize("sub", ALL_SUBSTRATES)
def test_cooperation_eliciting(sub):
    coop, selfish = _total(sub, "NaiveAltruist"), _total(sub, "Defector")
    assert all(c > d for c, d in zip(coop, selfish))
