"""Manifest (TOML) parsing and JSONL persistence for records and episodes."""
from __future__ import annotations

import json
import sys
from pathlib import Path
from typing import Any, Iterable, Mapping

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .core import ArenaError, Phase, ScenarioSpec, ScoreRecord
from .substrates import make_scenario
from .tournament import AgentBinding, Manifest

_SCENARIO_KEYS = {
    "id", "substrate", "mode", "background", "phase", "population_size", "background_count",
    "horizon", "seed", "tags", "params", "theoretical_min", "theoretical_max",
}


class ManifestError(ArenaError, ValueError):
    pass


def _phase(value: str) -> str:
    aliases = {"dev": Phase.DEVELOPMENT.value, "eval": Phase.EVALUATION.value}
    return aliases.get(value, value)


def scenario_from_table(table: Mapping[str, Any]) -> ScenarioSpec:
    unknown = set(table) - _SCENARIO_KEYS
    if unknown:
        raise ManifestError(f"scenario {table.get('id')!r}: unknown keys {sorted(unknown)}")
    for key in ("id", "substrate", "mode", "background"):
        if key not in table:
            raise ManifestError(f"scenario {table.get('id')!r}: missing {key!r}")
    phase = _phase(str(table.get("phase", Phase.DEVELOPMENT.value)))
    kwargs = dict(
        population_size=table.get("population_size"),
        background_count=table.get("background_count"),
        horizon=table.get("horizon"),
        params=table.get("params"),
        seed=int(table.get("seed", 0)),
        tags=table.get("tags"),
        theoretical_min=table.get("theoretical_min"),
        theoretical_max=table.get("theoretical_max"),
    )
    try:
        return make_scenario(str(table["id"]), table["substrate"], table["mode"], str(table["background"]),
                             phase=phase, **kwargs)
    except ValueError:
        # Unknown substrate, mode or phase: keep the raw values so validation can name them.
        n = kwargs["population_size"] or 2
        return ScenarioSpec(
            scenario_id=str(table["id"]),
            substrate_id=str(table["substrate"]),
            mode=str(table["mode"]),
            background_strategy_id=str(table["background"]),
            population_size=int(n),
            background_count=int(kwargs["background_count"] or n - 1),
            horizon=int(kwargs["horizon"] or 0),
            theoretical_min=float(kwargs["theoretical_min"] if kwargs["theoretical_min"] is not None else 0.0),
            theoretical_max=float(kwargs["theoretical_max"] if kwargs["theoretical_max"] is not None else 1.0),
            tags=frozenset(kwargs["tags"] or ()),
            phase=phase,
            params=dict(kwargs["params"] or {}),
            seed=kwargs["seed"],
        )


def agent_from_table(table: Mapping[str, Any]) -> AgentBinding:
    if "name" not in table:
        raise ManifestError("roster entry without a name")
    kinds = [k for k in ("strategy", "python", "llm") if k in table]
    if len(kinds) != 1:
        raise ManifestError(f"agent {table['name']!r}: give exactly one of strategy, python or llm")
    kind = kinds[0]
    if kind == "llm":
        options = table["llm"]
        if not isinstance(options, Mapping):
            raise ManifestError(f"agent {table['name']!r}: llm must be a table")
        if "api_key" in options:
            raise ManifestError(f"agent {table['name']!r}: keep API keys out of manifests (use api_key_env)")
        return AgentBinding(str(table["name"]), "llm", "", dict(options))
    return AgentBinding(str(table["name"]), kind, str(table[kind]))


def parse_manifest(data: Mapping[str, Any]) -> Manifest:
    try:
        scenarios = tuple(scenario_from_table(t) for t in data.get("scenarios", []))
        roster = tuple(agent_from_table(t) for t in data.get("roster", []))
        cross = data.get("crossplay", {})
        return Manifest(
            scenarios=scenarios,
            roster=roster,
            runs_per_scenario=int(data.get("runs_per_scenario", 10)),
            master_seed=int(data.get("master_seed", 0)),
            crossplay_finalists=tuple(cross.get("finalists", ())),
            crossplay_scenarios=tuple(cross.get("scenarios", ())),
            crossplay_runs=cross.get("runs"),
        )
    except (TypeError, AttributeError) as exc:
        raise ManifestError(f"malformed manifest: {exc}") from exc


def load_manifest(path: str | Path) -> Manifest:
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ManifestError(f"{path}: {exc}") from exc
    return parse_manifest(data)


# --------------------------------------------------------------------------
# JSONL


def dumps_record(record: ScoreRecord) -> str:
    return json.dumps(record.to_dict())


def write_records(path: str | Path, records: Iterable[ScoreRecord]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(dumps_record(r) + "\n")


def read_records(path: str | Path) -> list[ScoreRecord]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                records.append(ScoreRecord.from_dict(json.loads(line)))
            except (ValueError, KeyError) as exc:
                raise ArenaError(f"{path}:{lineno}: bad record ({exc})") from exc
    return records


def write_episodes(path: str | Path, episodes) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for agent, episode in episodes:
            fh.write(json.dumps(episode.to_dict(agent), default=str) + "\n")
