import json
import textwrap

import pytest

from coop_arena.cli import EXIT_INVALID, EXIT_OK, EXIT_USAGE, EXIT_VEIL, main, parse_methods
from coop_arena.core import ScoreRecord
from coop_arena.manifest import ManifestError, load_manifest, parse_manifest
from coop_arena.ranking import Method

SMALL = """
master_seed = 5
runs_per_scenario = 3

[[roster]]
name = "cc"
strategy = "ConditionalCooperator"

[[roster]]
name = "defector"
strategy = "Defector"

[[scenarios]]
id = "rs_dev"
substrate = "RealityShow"
mode = "visitor"
background = "GrimTrigger"
phase = "dev"
tags = ["persuasion"]

[[scenarios]]
id = "lab_dev"
substrate = "LaborCollectiveAction"
mode = "resident"
background = "ConditionalCooperator"
phase = "development"
tags = ["coordination"]

[[scenarios]]
id = "hag_eval"
substrate = "Haggling"
mode = "visitor"
background = "Stubborn"
phase = "eval"
"""


def write(tmp_path, text=SMALL, name="m.toml"):
    path = tmp_path / name
    path.write_text(textwrap.dedent(text))
    return str(path)


def run_dev(tmp_path, out="out", *extra):
    return main(["run", "--manifest", write(tmp_path), "--phase", "dev", "--out", str(tmp_path / out), *extra])


def test_run_writes_expected_records(tmp_path):
    assert run_dev(tmp_path) == EXIT_OK
    lines = (tmp_path / "out" / "results.jsonl").read_text().splitlines()
    assert len(lines) == 3 * 2 * 2  # runs x dev scenarios x agents
    records = [ScoreRecord.from_dict(json.loads(line)) for line in lines]
    assert {r.scenario_id for r in records} == {"rs_dev", "lab_dev"}
    assert [json.dumps(r.to_dict()) for r in records] == lines  # lines round-trip
    episodes = (tmp_path / "out" / "trajectories.jsonl").read_text().splitlines()
    assert len(episodes) == 12 and "trajectory" in json.loads(episodes[0])


def test_run_eval_and_overrides(tmp_path):
    out = tmp_path / "ev"
    code = main(["run", "--manifest", write(tmp_path), "--phase", "eval", "--runs", "2", "--seed", "9", "--out", str(out)])
    assert code == EXIT_OK
    assert len((out / "results.jsonl").read_text().splitlines()) == 2 * 1 * 2


def test_run_missing_manifest(tmp_path, capsys):
    assert main(["run", "--manifest", str(tmp_path / "nope.toml"), "--out", str(tmp_path)]) == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_run_bad_toml(tmp_path):
    assert main(["run", "--manifest", write(tmp_path, "runs = [1,"), "--out", str(tmp_path)]) == EXIT_USAGE


def test_workers_do_not_change_bytes(tmp_path):
    assert run_dev(tmp_path, "one", "--workers", "1") == EXIT_OK
    assert run_dev(tmp_path, "four", "--workers", "4") == EXIT_OK
    for name in ("results.jsonl", "trajectories.jsonl"):
        assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "four" / name).read_bytes()


def test_veil_violation_exit(tmp_path, capsys):
    code = main(["run", "--manifest", write(tmp_path), "--phase", "eval", "--scenario", "rs_dev", "--out", str(tmp_path)])
    assert code == EXIT_VEIL and "veil" in capsys.readouterr().err


def test_crossplay_run(tmp_path):
    text = SMALL + '\n[crossplay]\nfinalists = ["cc", "defector"]\nruns = 2\n'
    out = tmp_path / "cp"
    assert main(["run", "--manifest", write(tmp_path, text), "--phase", "crossplay", "--out", str(out)]) == EXIT_OK
    assert len((out / "results.jsonl").read_text().splitlines()) > 0


def rank(tmp_path, *methods, results=None):
    args = ["rank", "--out", str(tmp_path / "out")]
    if results:
        args += ["--results", str(results)]
    for m in methods:
        args += ["--method", m]
    return main(args)


def test_rank_outputs(tmp_path):
    run_dev(tmp_path)
    assert rank(tmp_path, "elo,copeland") == EXIT_OK
    assert sorted(p.name for p in (tmp_path / "out").glob("ranking_*.csv")) == ["ranking_copeland.csv", "ranking_elo.csv"]
    assert rank(tmp_path, "all") == EXIT_OK
    assert len(list((tmp_path / "out").glob("ranking_*.csv"))) == 5
    assert len(list((tmp_path / "out").glob("ranking_*.md"))) == 5
    header = (tmp_path / "out" / "ranking_iml.md").read_text().splitlines()[0]
    assert header == "| Rank | Submission | Score |"


def test_rank_errors(tmp_path, capsys):
    empty = tmp_path / "empty.jsonl"
    empty.write_text("")
    assert rank(tmp_path, "elo", results=empty) == EXIT_USAGE
    assert "no comparisons" in capsys.readouterr().err
    assert rank(tmp_path, "elo,borda", results=empty) == EXIT_USAGE
    assert rank(tmp_path, "elo", results=tmp_path / "missing.jsonl") == EXIT_USAGE


def test_parse_methods():
    assert parse_methods(None) == list(Method)
    assert parse_methods(["RP", "elo,ewa"]) == [Method.RANKED_PAIRS, Method.ELO, Method.EWA]
    with pytest.raises(ValueError):
        parse_methods(["kemeny"])


def test_report_pipeline(tmp_path):
    manifest = write(tmp_path)
    run_dev(tmp_path)
    rank(tmp_path, "all")
    out = tmp_path / "out"
    assert main(["report", "--out", str(out), "--manifest", manifest]) == EXIT_OK
    text = (out / "report.md").read_text()
    for heading in ("## Agent means", "## Scenario means", "## Tag correlations", "## Method agreement"):
        assert heading in text
    assert "tag:persuasion" in text
    first = (out / "report.md").read_bytes(), (out / "method_agreement.csv").read_bytes()
    assert main(["report", "--out", str(out), "--manifest", manifest]) == EXIT_OK
    assert ((out / "report.md").read_bytes(), (out / "method_agreement.csv").read_bytes()) == first


def test_report_without_tags_and_missing_inputs(tmp_path):
    run_dev(tmp_path)
    out = tmp_path / "out"
    assert main(["report", "--out", str(out)]) == EXIT_OK
    assert "Absent:" in (out / "report.md").read_text()
    assert main(["report", "--out", str(tmp_path / "nothing")]) == EXIT_USAGE


def test_validate(tmp_path, capsys):
    assert main(["validate", "--manifest", write(tmp_path)]) == EXIT_OK
    duplicate = SMALL.replace('id = "lab_dev"', 'id = "rs_dev"')
    assert main(["validate", "--manifest", write(tmp_path, duplicate, "d.toml")]) == EXIT_INVALID
    assert "rs_dev: duplicate scenario id" in capsys.readouterr().out
    overlap = SMALL.replace('id = "hag_eval"\nsubstrate = "Haggling"\nmode = "visitor"\nbackground = "Stubborn"',
                            'id = "rs_eval"\nsubstrate = "RealityShow"\nmode = "visitor"\nbackground = "GrimTrigger"')
    assert overlap != SMALL
    assert main(["validate", "--manifest", write(tmp_path, overlap, "o.toml")]) == EXIT_INVALID
    assert "veil overlap" in capsys.readouterr().out
    assert main(["run", "--manifest", str(tmp_path / "o.toml"), "--out", str(tmp_path)]) == EXIT_INVALID


def test_validate_reports_unknown_values(tmp_path, capsys):
    bad = SMALL.replace('substrate = "Haggling"', 'substrate = "Chess"')
    assert main(["validate", "--manifest", write(tmp_path, bad)]) == EXIT_INVALID
    assert "hag_eval" in capsys.readouterr().out


def test_manifest_rules():
    with pytest.raises(ManifestError):
        parse_manifest({"roster": [{"name": "x", "llm": {"api_key": "sk-1"}}]})
    with pytest.raises(ManifestError):
        parse_manifest({"roster": [{"name": "x", "strategy": "Defector", "python": "m:f"}]})
    with pytest.raises(ManifestError):
        parse_manifest({"scenarios": [{"id": "a", "substrate": "Haggling", "mode": "visitor",
                                       "background": "Stubborn", "colour": "red"}]})
    m = parse_manifest({"roster": [{"name": "x", "llm": {"model": "tiny", "api_key_env": "MY_KEY"}}]})
    assert m.roster[0].kind == "llm" and m.roster[0].options["api_key_env"] == "MY_KEY"


def test_shipped_manifest_is_valid(capsys):
    from pathlib import Path

    path = Path(__file__).resolve().parents[1] / "manifests" / "desk.toml"
    assert main(["validate", "--manifest", str(path)]) == EXIT_OK
    assert load_manifest(path).crossplay_runs is not None
