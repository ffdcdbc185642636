import math
import random

import pytest

from coop_arena.core import Role, ScoreRecord
from coop_arena.ranking import Method, RankingTable
from coop_arena.reporting import (
    OMISSION_NOTE,
    RosterMismatchError,
    comparative_report,
    full_report,
    scenario_summary,
    tag_correlations,
)
from coop_arena.substrates import make_scenario


def rec(agent, scenario, value, run=0, role=Role.FOCAL):
    return ScoreRecord(agent, scenario, run, role, value, value if role is Role.FOCAL else None)


def by_tag(correlations):
    return {c.tag: c for c in correlations}


def test_minus_one_fixture():
    # indicator (1, 1, 0, 0) against scores (0.2, 0.2, 0.8, 0.8):
    # centred products sum to -0.6, spreads are 1 and 0.36, so r = -0.6 / 0.6
    records = [rec("a", "s1", 0.2), rec("a", "s2", 0.2), rec("a", "s3", 0.8), rec("a", "s4", 0.8)]
    features = {"s1": {"tag:t"}, "s2": {"tag:t"}, "s3": set(), "s4": set()}
    (c,) = tag_correlations(records, features)
    assert c.tag == "tag:t" and c.sample_count == 4
    assert c.pearson_r == pytest.approx(-1.0, abs=1e-12)


def test_positive_sign_and_degenerate_indicator_absent():
    records = [rec("a", "s1", 0.9), rec("a", "s2", 0.1), rec("b", "s1", 0.7), rec("b", "s2", 0.3)]
    result = by_tag(tag_correlations(records, {"s1": {"tag:good", "tag:all"}, "s2": {"tag:all"}}))
    assert result["tag:good"].pearson_r > 0
    assert "tag:all" not in result


def test_no_score_variance_gives_nothing():
    records = [rec("a", "s1", 0.5), rec("a", "s2", 0.5)]
    assert tag_correlations(records, {"s1": {"tag:x"}, "s2": set()}) == []


def test_specs_supply_substrate_and_mode_indicators():
    specs = {
        "a": make_scenario("a", "RealityShow", "resident", "GrimTrigger", tags=["persuasion"]),
        "b": make_scenario("b", "Haggling", "visitor", "Stubborn"),
    }
    records = [rec("x", "a", 0.8), rec("x", "b", 0.2), rec("y", "a", 0.6), rec("y", "b", 0.4)]
    names = set(by_tag(tag_correlations(records, specs)))
    assert {"substrate:RealityShow", "substrate:Haggling", "mode:resident", "mode:visitor"} <= names


def test_correlations_ignore_record_order_and_background():
    rng = random.Random(4)
    records = [rec(a, f"s{i}", rng.random(), run) for a in "xyz" for i in range(4) for run in range(2)]
    records.append(rec("bg", "s0", 99.0, role=Role.BACKGROUND))
    features = {f"s{i}": {f"tag:{i % 2}", "tag:low" if i < 2 else "tag:high"} for i in range(4)}
    base = tag_correlations(records, features)
    rng.shuffle(records)
    assert tag_correlations(records, features) == base
    assert all(c.sample_count == 24 and -1 <= c.pearson_r <= 1 for c in base)


def table(method, order):
    return RankingTable.from_order(method, [(a, len(order) - i) for i, a in enumerate(order)])


def test_kendall_tau_identical_and_reversed():
    report = comparative_report([table(Method.ELO, "ABCD"), table(Method.COPELAND, "ABCD"),
                                 table(Method.IML, "DCBA")])
    assert report.tau[("Elo", "Copeland")] == pytest.approx(1.0)
    assert report.tau[("Elo", "IML")] == pytest.approx(-1.0)
    for (m1, m2), t in report.tau.items():
        assert t == pytest.approx(report.tau[(m2, m1)])
    assert report.to_csv().splitlines()[:2] == ["submission,Elo,Copeland,IML", "A,1,1,4"]
    assert "| Submission | Elo | Copeland | IML |" in report.to_markdown()


def test_roster_mismatch():
    with pytest.raises(RosterMismatchError):
        comparative_report([table(Method.ELO, "ABC"), table(Method.COPELAND, "ABD")])
    with pytest.raises(ValueError):
        comparative_report([])


def test_single_agent_tau_undefined():
    report = comparative_report([table(Method.ELO, "A"), table(Method.EWA, "A")])
    assert math.isnan(report.tau[("Elo", "EwA")]) and "n/a" in report.to_markdown()


def test_ranking_markdown_columns():
    header = table(Method.RANKED_PAIRS, "AB").to_markdown().splitlines()[0]
    assert [c.strip() for c in header.strip("|").split("|")] == ["Rank", "Submission", "Score"]


def test_scenario_summary_examples():
    rows = scenario_summary([rec("a", "hi", 1.0), rec("b", "hi", 1.0)])
    assert (rows[0].mean, rows[0].se, rows[0].count) == (1.0, 0.0, 2)
    rows = scenario_summary([rec("a", "low", 0.4), rec("a", "top", 0.9),
                             rec("bg", "low", 50.0, role=Role.BACKGROUND)])
    assert [r.scenario_id for r in rows] == ["top", "low"]
    assert rows[1].count == 1 and rows[1].mean == pytest.approx(0.4)


def test_full_report_sections():
    records = [rec("a", "s1", 0.9), rec("b", "s1", 0.1), rec("a", "s2", 0.6), rec("b", "s2", 0.5)]
    text = full_report(records, None, [table(Method.ELO, "ab"), table(Method.EWA, "ab")])
    for heading in ("## Agent means", "## Scenario means", "## Tag correlations", "## Method agreement"):
        assert heading in text
    assert "Absent:" in text and OMISSION_NOTE in text
    specs = {"s1": make_scenario("s1", "RealityShow", "visitor", "GrimTrigger", tags=["persuasion"]),
             "s2": make_scenario("s2", "RealityShow", "visitor", "GrimTrigger", tags=["calculation"])}
    tagged = full_report(records, specs)
    assert "tag:persuasion" in tagged and "Absent: no ranking tables supplied." in tagged
