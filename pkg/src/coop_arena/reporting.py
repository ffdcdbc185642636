"""Descriptive summaries: agent and scenario means, tag correlations, method agreement."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from scipy.stats import kendalltau

from .core import ArenaError, Mode, Role, ScenarioSpec, ScoreRecord, SubstrateId
from .ranking import RankingTable
from .tournament import Summary, summarize

OMISSION_NOTE = (
    "Scenario effects are reported as plain means and Pearson correlations. "
    "No Bayesian regression or measurement-layout model is fitted."
)


class RosterMismatchError(ArenaError, ValueError):
    pass


@dataclass(frozen=True)
class TagCorrelation:
    tag: str
    pearson_r: float
    sample_count: int


def _pearson(xs: Sequence[float], ys: Sequence[float]) -> float | None:
    n = len(xs)
    if n < 2:
        return None
    mx, my = math.fsum(xs) / n, math.fsum(ys) / n
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    syy = math.fsum((y - my) ** 2 for y in ys)
    if sxx == 0 or syy == 0:
        return None
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    return max(-1.0, min(1.0, sxy / math.sqrt(sxx * syy)))


def scenario_features(spec: ScenarioSpec) -> set[str]:
    """Indicator names that are true for a scenario: tags, substrate, mode."""
    feats = {f"tag:{getattr(t, 'value', t)}" for t in spec.tags}
    feats.add(f"substrate:{SubstrateId(spec.substrate_id).value}")
    feats.add(f"mode:{Mode(spec.mode).value}")
    return feats


def tag_correlations(records: Iterable[ScoreRecord], scenarios: Mapping[str, ScenarioSpec | Iterable[str]]) -> list[TagCorrelation]:
    """Pearson r between each indicator and the normalized focal score.

    ``scenarios`` maps scenario id to a ScenarioSpec (tags, substrate and
    mode indicators) or to a plain collection of feature names. Indicators
    with no variance, or records with no score variance, give no entry.
    """
    features: dict[str, set[str]] = {}
    for sid, spec in scenarios.items():
        features[sid] = scenario_features(spec) if isinstance(spec, ScenarioSpec) else set(spec)
    rows = sorted(
        ((r.scenario_id, r.run_index, r.agent, r.normalized) for r in records
         if r.role is Role.FOCAL and r.normalized is not None and r.scenario_id in features),
    )
    scores = [row[3] for row in rows]
    names = sorted(set().union(*features.values())) if features else []
    out = []
    for name in names:
        indicator = [1.0 if name in features[row[0]] else 0.0 for row in rows]
        r = _pearson(indicator, scores)
        if r is not None:
            out.append(TagCorrelation(name, r, len(rows)))
    return out


@dataclass(frozen=True)
class ScenarioRow:
    scenario_id: str
    mean: float
    se: float
    count: int


def scenario_summary(records: Iterable[ScoreRecord]) -> list[ScenarioRow]:
    """Focal mean and SE per scenario, best scenario first."""
    focal = [r for r in records if r.role is Role.FOCAL]
    rows = [ScenarioRow(k, s.mean, s.se, s.count) for k, s in summarize(focal, by="scenario").items()]
    return sorted(rows, key=lambda r: (-r.mean, r.scenario_id))


@dataclass(frozen=True)
class ComparativeReport:
    methods: tuple[str, ...]
    agents: tuple[str, ...]
    ranks: dict[str, dict[str, int]]  # method -> agent -> rank
    tau: dict[tuple[str, str], float]

    def to_markdown(self) -> str:
        lines = ["| Submission | " + " | ".join(self.methods) + " |",
                 "|:---|" + "---:|" * len(self.methods)]
        for a in self.agents:
            lines.append(f"| {a} | " + " | ".join(str(self.ranks[m][a]) for m in self.methods) + " |")
        lines += ["", "Kendall tau between methods:", "",
                  "| | " + " | ".join(self.methods) + " |", "|:---|" + "---:|" * len(self.methods)]
        for m1 in self.methods:
            lines.append(f"| {m1} | " + " | ".join(_fmt_tau(self.tau[(m1, m2)]) for m2 in self.methods) + " |")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["submission", *self.methods])
        for a in self.agents:
            writer.writerow([a, *(self.ranks[m][a] for m in self.methods)])
        return buf.getvalue()


def _fmt_tau(t: float) -> str:
    return "n/a" if math.isnan(t) else f"{t:.3f}"


def comparative_report(tables: Sequence[RankingTable]) -> ComparativeReport:
    """Rank matrix across methods plus pairwise Kendall tau."""
    if not tables:
        raise ValueError("need at least one ranking table")
    roster = set(tables[0].order)
    for t in tables[1:]:
        if set(t.order) != roster:
            raise RosterMismatchError(f"{t.method.value} ranks a different set of agents")
    methods = tuple(t.method.value for t in tables)
    agents = tuple(tables[0].order)
    ranks = {t.method.value: {r.agent: r.rank for r in t.rows} for t in tables}
    tau = {}
    for m1 in methods:
        for m2 in methods:
            if m1 == m2:
                tau[(m1, m2)] = 1.0
            elif len(agents) < 2:
                tau[(m1, m2)] = math.nan
            else:
                tau[(m1, m2)] = float(kendalltau([ranks[m1][a] for a in agents], [ranks[m2][a] for a in agents])[0])
    return ComparativeReport(methods, agents, ranks, tau)


def _summary_table(title: str, key: str, rows: Iterable[tuple[str, Summary]]) -> list[str]:
    lines = [f"## {title}", "", f"| {key} | Mean | SE | N |", "|:---|---:|---:|---:|"]
    lines += [f"| {k} | {s.mean:.3f} | {s.se:.3f} | {s.count} |" for k, s in rows]
    return lines + [""]


def full_report(
    records: Sequence[ScoreRecord],
    scenarios: Mapping[str, ScenarioSpec] | None = None,
    tables: Sequence[RankingTable] = (),
) -> str:
    """Markdown with agent means, scenario means, tag correlations and method agreement."""
    focal = [r for r in records if r.role is Role.FOCAL]
    agents = sorted(summarize(focal).items(), key=lambda kv: (-kv[1].mean, kv[0]))
    lines = ["# Tournament report", ""]
    lines += _summary_table("Agent means", "Submission", agents)
    lines += _summary_table("Scenario means", "Scenario",
                            [(r.scenario_id, Summary(r.mean, r.se, r.count)) for r in scenario_summary(focal)])

    lines += ["## Tag correlations", ""]
    correlations = tag_correlations(focal, scenarios) if scenarios else []
    if correlations:
        lines += ["| Indicator | Pearson r | N |", "|:---|---:|---:|"]
        lines += [f"| {c.tag} | {c.pearson_r:.3f} | {c.sample_count} |" for c in correlations]
    else:
        lines.append("Absent: no scenario tags available, or no indicator varies across the scored scenarios.")
    lines += ["", OMISSION_NOTE, ""]

    lines += ["## Method agreement", ""]
    if tables:
        lines.append(comparative_report(tables).to_markdown())
    else:
        lines += ["Absent: no ranking tables supplied.", ""]
    return "\n".join(lines).rstrip("\n") + "\n"
