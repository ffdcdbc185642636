"""Episode execution, phase orchestration, cross-play seating and seeding."""
from __future__ import annotations

import importlib
import itertools
import logging
import math
import random
import statistics
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping, Sequence

from .core import (
    ArenaError,
    Event,
    Mode,
    Phase,
    Role,
    ScenarioSpec,
    ScoreRecord,
    Seat,
    SeatAssignment,
    compose_population,
    normalize_score,
    validate_scenario,
)
from .populations import BackgroundStrategyId, compatible, make_background_policy
from .substrates import check_scenario, get_substrate

log = logging.getLogger(__name__)

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK = (1 << 64) - 1

# Seat indices reserved for environment randomness.
ENV_SETUP_SEAT = -1
ENV_STEP_SEAT = -2
SEATING_SEAT = -3


class VeilViolation(ArenaError):
    """A phase was asked to run a scenario that belongs to another phase."""


class InfeasibleSeatingError(ArenaError, ValueError):
    pass


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * _FNV_PRIME) & _MASK
    return h


def derive_seed(master_seed: int, scenario_id: str, run_index: int, seat_index: int) -> int:
    """64-bit FNV-1a over ``master|scenario|run|seat`` (unit-separator joined, UTF-8)."""
    return fnv1a64(f"{int(master_seed)}\x1f{scenario_id}\x1f{int(run_index)}\x1f{int(seat_index)}".encode("utf-8"))


# --------------------------------------------------------------------------
# agents


@dataclass(frozen=True)
class AgentBinding:
    """How to build a policy for one roster entry.

    ``kind`` is ``"strategy"`` (a scripted strategy id in ``target``),
    ``"python"`` (``"module:factory"``; the factory receives the substrate id)
    or ``"llm"`` (``options`` feed the chat client and scaffold).
    """

    name: str
    kind: str = "strategy"
    target: str = ""
    options: Mapping[str, Any] = field(default_factory=dict)

    def factory(self, substrate_id: str) -> Callable[[], Any]:
        if self.kind == "strategy":
            return lambda: make_background_policy(self.target, substrate_id)
        if self.kind == "python":
            module_name, _, attr = self.target.partition(":")
            fn = getattr(importlib.import_module(module_name), attr or "make_policy")
            return lambda: fn(substrate_id)
        if self.kind == "llm":
            from .llm_agent import policy_from_options

            return lambda: policy_from_options(self.name, substrate_id, dict(self.options))
        raise ArenaError(f"agent {self.name!r}: unknown binding kind {self.kind!r}")

    def check(self) -> list[str]:
        if not self.name:
            return ["empty-agent-name"]
        if self.kind == "strategy":
            try:
                BackgroundStrategyId(self.target)
            except ValueError:
                return ["unknown-strategy"]
        elif self.kind == "python":
            if ":" not in self.target:
                return ["bad-python-target"]
        elif self.kind != "llm":
            return ["unknown-binding-kind"]
        return []


def strategy_agent(strategy_id: str, name: str | None = None) -> AgentBinding:
    return AgentBinding(name or str(BackgroundStrategyId(strategy_id).value), "strategy", str(BackgroundStrategyId(strategy_id).value))


# --------------------------------------------------------------------------
# episodes


@dataclass(frozen=True)
class SeatResult:
    seat: int
    agent: str
    role: Role
    raw: float


@dataclass(frozen=True)
class EpisodeResult:
    scenario_id: str
    run_index: int
    seats: tuple[SeatResult, ...]
    trajectory: tuple[Event, ...]
    seed: int

    def raw_scores(self) -> list[float]:
        return [s.raw for s in self.seats]

    def to_dict(self, agent: str | None = None) -> dict:
        data = {
            "scenario_id": self.scenario_id,
            "run_index": self.run_index,
            "seed": self.seed,
            "seats": [{"seat": s.seat, "agent": s.agent, "role": s.role.value, "raw": s.raw} for s in self.seats],
            "trajectory": [e.to_dict() for e in self.trajectory],
        }
        if agent is not None:
            data["agent"] = agent
        return data


def run_episode(spec: ScenarioSpec, seats: SeatAssignment, run_index: int, *, master_seed: int = 0) -> EpisodeResult:
    """Play one episode to the horizon.

    Environment randomness and every policy's seed come from ``derive_seed``,
    so the result only depends on the arguments. A policy that raises is
    replaced by the substrate default action for the rest of the episode; an
    illegal action is replaced by the default for that step only.
    """
    if len(seats) != spec.population_size:
        raise ArenaError(f"{len(seats)} seats for a population of {spec.population_size}")
    sub = get_substrate(spec.substrate_id)
    key = master_seed ^ spec.seed
    setup_seed = derive_seed(key, spec.scenario_id, run_index, ENV_SETUP_SEAT)
    state = sub.initial_state(spec, setup_seed)
    rng = random.Random(derive_seed(key, spec.scenario_id, run_index, ENV_STEP_SEAT))
    for seat in seats.seats:
        seat.policy.reset(derive_seed(key, spec.scenario_id, run_index, seat.index))

    observations = {s.index: sub.observe(state, s.index) for s in seats.seats}
    trajectory: list[Event] = []
    broken: set[int] = set()
    while not state.done:
        joint = {}
        for seat in seats.seats:
            i = seat.index
            action = None
            if i not in broken:
                try:
                    action = seat.policy.act(observations[i])
                except Exception as exc:  # noqa: BLE001 - contain any submission failure
                    broken.add(i)
                    log.warning("seat %d (%s) crashed in %s: %r", i, seat.agent, spec.scenario_id, exc)
                    trajectory.append(Event(state.round, i, "policy_error", {"error": repr(exc)}))
                else:
                    reason = sub.check(state, i, action)
                    if reason is not None:
                        trajectory.append(Event(state.round, i, "rejected", {"reason": reason}))
                        action = None
            joint[i] = action if action is not None else sub.default_action(state, i)
            drain = getattr(seat.policy, "drain_usage", None)
            if callable(drain):
                for usage in drain():
                    trajectory.append(Event(state.round, i, "llm_usage", usage))
        state, observations, events = sub.step(state, joint, rng)
        trajectory.extend(events)

    results = tuple(SeatResult(s.index, s.agent, s.role, float(state.scores[s.index])) for s in seats.seats)
    return EpisodeResult(spec.scenario_id, run_index, results, tuple(trajectory), setup_seed)


# --------------------------------------------------------------------------
# manifests and phases


@dataclass(frozen=True)
class CrossplayConfig:
    finalists: tuple[AgentBinding, ...]
    scenarios: tuple[ScenarioSpec, ...]
    runs: int = 10


@dataclass(frozen=True)
class Manifest:
    scenarios: tuple[ScenarioSpec, ...]
    roster: tuple[AgentBinding, ...]
    runs_per_scenario: int = 10
    master_seed: int = 0
    crossplay_finalists: tuple[str, ...] = ()
    crossplay_scenarios: tuple[str, ...] = ()
    crossplay_runs: int | None = None

    def scenarios_for(self, phase: Phase | str) -> list[ScenarioSpec]:
        phase = Phase(phase)
        return sorted((s for s in self.scenarios if s.phase == phase), key=lambda s: s.scenario_id)

    def crossplay_config(self, finalists: Sequence[str] | None = None) -> CrossplayConfig:
        names = list(finalists if finalists is not None else self.crossplay_finalists)
        by_name = {a.name: a for a in self.roster}
        missing = [n for n in names if n not in by_name]
        if missing:
            raise ArenaError(f"cross-play finalists not in roster: {missing}")
        by_id = {s.scenario_id: s for s in self.scenarios}
        if self.crossplay_scenarios:
            scenarios = [by_id[i] for i in self.crossplay_scenarios]
        else:
            scenarios = self.scenarios_for(Phase.EVALUATION)
        return CrossplayConfig(tuple(by_name[n] for n in names), tuple(scenarios), self.crossplay_runs or self.runs_per_scenario)


def validate_manifest(manifest: Manifest) -> list[tuple[str, str]]:
    """Return ``(where, code)`` pairs for every problem found."""
    problems: list[tuple[str, str]] = []
    seen: set[str] = set()
    valid = []
    for spec in manifest.scenarios:
        sid = spec.scenario_id
        if sid in seen:
            problems.append((sid, "duplicate-scenario-id"))
        seen.add(sid)
        codes = validate_scenario(spec)
        if "unknown-substrate" not in codes:
            codes += check_scenario(spec)
            try:
                if not compatible(spec.background_strategy_id, spec.substrate_id):
                    codes.append("unsupported-background-strategy")
            except ValueError:
                codes.append("unknown-background-strategy")
        problems.extend((sid, c) for c in codes)
        if not codes:
            valid.append(spec)

    # broken scenarios cannot be fingerprinted; they are already reported above
    dev = {s.fingerprint(): s.scenario_id for s in valid if s.phase == Phase.DEVELOPMENT}
    for spec in valid:
        if spec.phase == Phase.EVALUATION and spec.fingerprint() in dev:
            problems.append((spec.scenario_id, "veil-overlap"))

    names: set[str] = set()
    for agent in manifest.roster:
        if agent.name in names:
            problems.append((agent.name, "duplicate-agent"))
        names.add(agent.name)
        problems.extend((agent.name, c) for c in agent.check())
    if manifest.runs_per_scenario < 1:
        problems.append(("", "runs-per-scenario"))
    return problems


@dataclass(frozen=True)
class _Task:
    spec: ScenarioSpec
    agent: AgentBinding
    run_index: int
    master_seed: int


def _seating_seed(spec: ScenarioSpec, run_index: int, master_seed: int) -> int:
    return derive_seed(master_seed ^ spec.seed, spec.scenario_id, run_index, SEATING_SEAT)


def _run_task(task: _Task) -> EpisodeResult:
    spec = task.spec
    seats = compose_population(
        spec,
        task.agent.factory(spec.substrate_id),
        lambda: make_background_policy(spec.background_strategy_id, spec.substrate_id),
        _seating_seed(spec, task.run_index, task.master_seed),
        focal_agent=task.agent.name,
    )
    return run_episode(spec, seats, task.run_index, master_seed=task.master_seed)


def _execute(fn, tasks: list, workers: int) -> list:
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, tasks, chunksize=max(1, len(tasks) // (4 * workers))))


def _mean(xs: Iterable[float]) -> float:
    xs = list(xs)
    return sum(xs) / len(xs)


def _records_for(spec: ScenarioSpec, agent: str, episode: EpisodeResult, include_background: bool) -> list[ScoreRecord]:
    focal = [s.raw for s in episode.seats if s.role is Role.FOCAL]
    raw = _mean(focal)
    records = [
        ScoreRecord(agent, spec.scenario_id, episode.run_index, Role.FOCAL, raw,
                    normalize_score(raw, spec.theoretical_min, spec.theoretical_max))
    ]
    if include_background:
        background = [s for s in episode.seats if s.role is Role.BACKGROUND]
        records.append(ScoreRecord(background[0].agent, spec.scenario_id, episode.run_index, Role.BACKGROUND,
                                   _mean(s.raw for s in background)))
    return records


def _sort_key(r: ScoreRecord):
    return (r.scenario_id, r.run_index, r.agent, r.role.value)


@dataclass(frozen=True)
class PhaseResult:
    records: list[ScoreRecord]
    episodes: list[tuple[str, EpisodeResult]]


def execute_phase(
    manifest: Manifest,
    phase: Phase | str,
    *,
    workers: int = 1,
    scenario_ids: Iterable[str] | None = None,
    include_background: bool = False,
) -> PhaseResult:
    """Run every (agent, scenario, run) of ``phase``; keep the episodes too."""
    phase = Phase(phase)
    if scenario_ids is None:
        selected = manifest.scenarios_for(phase)
    else:
        by_id = {s.scenario_id: s for s in manifest.scenarios}
        missing = [i for i in scenario_ids if i not in by_id]
        if missing:
            raise ArenaError(f"unknown scenario ids: {missing}")
        selected = sorted((by_id[i] for i in set(scenario_ids)), key=lambda s: s.scenario_id)
    for spec in selected:
        if spec.phase != phase:
            raise VeilViolation(f"scenario {spec.scenario_id!r} belongs to the {Phase(spec.phase).value} phase, not {phase.value}")
    if not manifest.roster:
        return PhaseResult([], [])

    tasks = [
        _Task(spec, agent, run, manifest.master_seed)
        for spec in selected
        for run in range(manifest.runs_per_scenario)
        for agent in manifest.roster
    ]
    episodes = _execute(_run_task, tasks, workers)
    records: list[ScoreRecord] = []
    for task, episode in zip(tasks, episodes):
        records.extend(_records_for(task.spec, task.agent.name, episode, include_background))
    order = sorted(range(len(tasks)), key=lambda i: (tasks[i].spec.scenario_id, tasks[i].run_index, tasks[i].agent.name))
    return PhaseResult(sorted(records, key=_sort_key), [(tasks[i].agent.name, episodes[i]) for i in order])


def run_phase(manifest: Manifest, phase: Phase | str, **kwargs) -> list[ScoreRecord]:
    """Focal (and optionally background) score records for one phase, sorted."""
    return execute_phase(manifest, phase, **kwargs).records


# --------------------------------------------------------------------------
# cross-play


def crossplay_schedule(finalists: Sequence[str], seats: int, runs: int) -> list[list[str | None]]:
    """Seat order for each run; ``None`` marks a background seat.

    With no more finalists than seats everyone plays every run and seat
    positions rotate by one per run. With more finalists, each run takes the
    combination of ``seats`` finalists with the fewest appearances so far,
    preferring combinations used less often and then lexicographic order.
    Appearance counts stay within one of each other. The chosen lineup is
    rotated by run.
    """
    f = len(finalists)
    if f < 2:
        raise InfeasibleSeatingError("cross-play needs at least two finalists")
    if seats < 2:
        raise InfeasibleSeatingError("cross-play needs at least two seats")
    if f > seats * runs:
        raise InfeasibleSeatingError(f"{f} finalists cannot all be seated in {runs} runs of {seats} seats")
    schedule = []
    if f <= seats:
        base: list[str | None] = list(finalists) + [None] * (seats - f)
        for r in range(runs):
            shift = r % seats
            schedule.append(base[-shift:] + base[:-shift] if shift else list(base))
        return schedule

    counts = Counter({name: 0 for name in finalists})
    combos = list(itertools.combinations(sorted(finalists), seats))
    used: Counter = Counter()
    for r in range(runs):
        pick = min(combos, key=lambda c: (sum(counts[n] for n in c), max(counts[n] for n in c), used[c], c))
        counts.update(pick)
        used[pick] += 1
        shift = r % seats
        members = list(pick)
        schedule.append(members[shift:] + members[:shift])
    return schedule


@dataclass(frozen=True)
class _CrossTask:
    spec: ScenarioSpec
    lineup: tuple[str | None, ...]
    agents: tuple[AgentBinding, ...]
    run_index: int
    master_seed: int


def _run_cross_task(task: _CrossTask) -> EpisodeResult:
    spec = task.spec
    by_name = {a.name: a for a in task.agents}
    seats = []
    for i, name in enumerate(task.lineup):
        if name is None:
            policy = make_background_policy(spec.background_strategy_id, spec.substrate_id)
            seats.append(Seat(i, policy, Role.BACKGROUND, f"background:{spec.background_strategy_id}"))
        else:
            seats.append(Seat(i, by_name[name].factory(spec.substrate_id)(), Role.FOCAL, name))
    return run_episode(spec, SeatAssignment(tuple(seats)), task.run_index, master_seed=task.master_seed)


def execute_crossplay(config: CrossplayConfig, *, master_seed: int = 0, workers: int = 1) -> PhaseResult:
    names = [a.name for a in config.finalists]
    if len(set(names)) != len(names):
        raise ArenaError("duplicate finalist names")
    tasks = []
    for spec in sorted(config.scenarios, key=lambda s: s.scenario_id):
        for run, lineup in enumerate(crossplay_schedule(names, spec.population_size, config.runs)):
            tasks.append(_CrossTask(spec, tuple(lineup), tuple(config.finalists), run, master_seed))
    episodes = _execute(_run_cross_task, tasks, workers)
    records = []
    for task, episode in zip(tasks, episodes):
        spec = task.spec
        for seat in episode.seats:
            if seat.role is Role.FOCAL:
                records.append(ScoreRecord(seat.agent, spec.scenario_id, episode.run_index, Role.FOCAL, seat.raw,
                                           normalize_score(seat.raw, spec.theoretical_min, spec.theoretical_max)))
    return PhaseResult(sorted(records, key=_sort_key), [("crossplay", e) for e in episodes])


def run_crossplay(config: CrossplayConfig, *, master_seed: int = 0, workers: int = 1) -> list[ScoreRecord]:
    """One record per finalist seat per cross-play episode."""
    return execute_crossplay(config, master_seed=master_seed, workers=workers).records


# --------------------------------------------------------------------------
# summaries


@dataclass(frozen=True)
class Summary:
    mean: float
    se: float
    count: int


def summarize(records: Iterable[ScoreRecord], by: str = "agent") -> dict[str, Summary]:
    """Mean and standard error of normalized focal scores per agent or scenario."""
    if by not in ("agent", "scenario"):
        raise ValueError("by must be 'agent' or 'scenario'")
    groups: dict[str, list[float]] = {}
    for r in records:
        if r.normalized is None:
            continue
        key = r.agent if by == "agent" else r.scenario_id
        groups.setdefault(key, []).append(r.normalized)
    out = {}
    for key in sorted(groups):
        xs = groups[key]
        se = statistics.stdev(xs) / math.sqrt(len(xs)) if len(xs) > 1 else 0.0
        out[key] = Summary(statistics.fmean(xs), se, len(xs))
    return out

