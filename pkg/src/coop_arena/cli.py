"""Command-line entry point: ``coop-arena {run,rank,report,validate}``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from dataclasses import replace
from pathlib import Path

from .core import ArenaError
from .manifest import ManifestError, load_manifest, read_records, write_episodes, write_records
from .ranking import ConvergenceError, Method, NoComparisonsError, RankingTable, rank_all
from .reporting import comparative_report, full_report
from .tournament import (
    InfeasibleSeatingError,
    Manifest,
    VeilViolation,
    execute_crossplay,
    execute_phase,
    validate_manifest,
)

EXIT_OK, EXIT_INVALID, EXIT_USAGE, EXIT_VEIL = 0, 1, 2, 3

_METHOD_NAMES = {
    "elo": Method.ELO,
    "copeland": Method.COPELAND,
    "ranked_pairs": Method.RANKED_PAIRS,
    "rankedpairs": Method.RANKED_PAIRS,
    "rp": Method.RANKED_PAIRS,
    "iml": Method.IML,
    "ewa": Method.EWA,
}
_PHASES = {"dev": "development", "eval": "evaluation", "crossplay": "crossplay"}

log = logging.getLogger("coop_arena")


def _fail(code: int, message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def parse_methods(values: list[str] | None) -> list[Method]:
    names = []
    for v in values or ["all"]:
        names += [n.strip().lower() for n in v.split(",") if n.strip()]
    if "all" in names:
        return list(Method)
    methods = []
    for n in names:
        if n not in _METHOD_NAMES:
            raise ValueError(f"unknown ranking method {n!r}; choose from {sorted(set(_METHOD_NAMES))} or all")
        if _METHOD_NAMES[n] not in methods:
            methods.append(_METHOD_NAMES[n])
    return methods


def _table_path(out: Path, method: Method, ext: str) -> Path:
    return out / f"ranking_{method.value.lower()}.{ext}"


def _apply_llm_flags(manifest: Manifest, args) -> Manifest:
    overrides = {k: v for k, v in (("base_url", args.llm_base_url), ("model", args.llm_model),
                                    ("max_calls_per_step", args.llm_max_calls)) if v is not None}
    if not overrides:
        return manifest
    roster = tuple(replace(a, options={**a.options, **overrides}) if a.kind == "llm" else a for a in manifest.roster)
    return replace(manifest, roster=roster)


def cmd_run(args) -> int:
    try:
        manifest = load_manifest(args.manifest)
    except (OSError, ManifestError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    if args.runs is not None:
        manifest = replace(manifest, runs_per_scenario=args.runs)
    if args.seed is not None:
        manifest = replace(manifest, master_seed=args.seed)
    manifest = _apply_llm_flags(manifest, args)
    problems = validate_manifest(manifest)
    if problems:
        for where, code in problems:
            print(f"{where or 'manifest'}: {code}", file=sys.stderr)
        return EXIT_INVALID

    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        return _fail(EXIT_USAGE, f"cannot create {out}: {exc}")
    phase = _PHASES[args.phase]
    try:
        if phase == "crossplay":
            finalists = args.finalist or None
            result = execute_crossplay(manifest.crossplay_config(finalists), master_seed=manifest.master_seed, workers=args.workers)
        else:
            result = execute_phase(manifest, phase, workers=args.workers, scenario_ids=args.scenario or None,
                                   include_background=args.include_background)
    except VeilViolation as exc:
        return _fail(EXIT_VEIL, f"veil violation: {exc}")
    except InfeasibleSeatingError as exc:
        return _fail(EXIT_INVALID, str(exc))
    except ArenaError as exc:
        return _fail(EXIT_USAGE, str(exc))
    try:
        write_records(out / "results.jsonl", result.records)
        write_episodes(out / "trajectories.jsonl", result.episodes)
    except OSError as exc:
        return _fail(EXIT_USAGE, str(exc))
    print(f"wrote {len(result.records)} records to {out / 'results.jsonl'}")
    return EXIT_OK


def cmd_rank(args) -> int:
    try:
        methods = parse_methods(args.method)
    except ValueError as exc:
        return _fail(EXIT_USAGE, str(exc))
    results = Path(args.results) if args.results else Path(args.out) / "results.jsonl"
    try:
        records = read_records(results)
    except (OSError, ArenaError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    try:
        tables = rank_all(records, methods, args.epsilon, by=args.aggregate)
    except NoComparisonsError:
        return _fail(EXIT_USAGE, "no comparisons in the results file")
    except ConvergenceError as exc:
        return _fail(EXIT_INVALID, str(exc))
    if any(not t.rows for t in tables.values()):
        return _fail(EXIT_USAGE, "no comparisons in the results file")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for method, table in tables.items():
        _table_path(out, method, "csv").write_text(table.to_csv(), encoding="utf-8")
        _table_path(out, method, "md").write_text(table.to_markdown(), encoding="utf-8")
        print(f"{method.value}: {', '.join(table.order)}")
    return EXIT_OK


def read_table(path: Path, method: Method) -> RankingTable:
    with open(path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    return RankingTable.from_order(method, [(r["submission"], float(r["score"])) for r in rows])


def cmd_report(args) -> int:
    out = Path(args.out)
    results = Path(args.results) if args.results else out / "results.jsonl"
    try:
        records = read_records(results)
    except (OSError, ArenaError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    if not records:
        return _fail(EXIT_USAGE, f"{results} has no records")
    scenarios = None
    if args.manifest:
        try:
            scenarios = {s.scenario_id: s for s in load_manifest(args.manifest).scenarios}
        except (OSError, ManifestError) as exc:
            return _fail(EXIT_USAGE, str(exc))
    tables = [read_table(_table_path(out, m, "csv"), m) for m in Method if _table_path(out, m, "csv").exists()]
    try:
        text = full_report(records, scenarios, tables)
    except ArenaError as exc:
        return _fail(EXIT_USAGE, str(exc))
    out.mkdir(parents=True, exist_ok=True)
    (out / "report.md").write_text(text, encoding="utf-8")
    if tables:
        (out / "method_agreement.csv").write_text(comparative_report(tables).to_csv(), encoding="utf-8")
    print(f"wrote {out / 'report.md'}")
    return EXIT_OK


def cmd_validate(args) -> int:
    try:
        manifest = load_manifest(args.manifest)
    except (OSError, ManifestError) as exc:
        return _fail(EXIT_USAGE, str(exc))
    problems = validate_manifest(manifest)
    for where, code in problems:
        print(f"{where or 'manifest'}: {code.replace('-', ' ')}")
    if not problems:
        print(f"ok: {len(manifest.scenarios)} scenarios, {len(manifest.roster)} agents")
    return EXIT_INVALID if problems else EXIT_OK


def _workers(value: str) -> int:
    n = int(value)
    if n < 1:
        raise argparse.ArgumentTypeError("--workers must be >= 1")
    return n


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coop-arena", description="Run and rank cooperation tournaments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="play a phase and write results.jsonl / trajectories.jsonl")
    run.add_argument("--manifest", required=True)
    run.add_argument("--phase", choices=sorted(_PHASES), default="dev")
    run.add_argument("--runs", type=int, help="override runs_per_scenario")
    run.add_argument("--seed", type=int, help="override master_seed")
    run.add_argument("--workers", type=_workers, default=1)
    run.add_argument("--out", default="out")
    run.add_argument("--scenario", action="append", help="restrict to this scenario id (repeatable)")
    run.add_argument("--finalist", action="append", help="cross-play finalist (repeatable; default from manifest)")
    run.add_argument("--include-background", action="store_true", help="also emit background records")
    run.add_argument("--llm-base-url", help="overrides the endpoint env var")
    run.add_argument("--llm-model")
    run.add_argument("--llm-max-calls", type=int, help="per-step call budget for llm agents")
    run.set_defaults(func=cmd_run)

    rank = sub.add_parser("rank", help="rank agents from results.jsonl")
    rank.add_argument("--results", help="default: <out>/results.jsonl")
    rank.add_argument("--out", default="out")
    rank.add_argument("--method", action="append", help="comma-separated methods or 'all' (default)")
    rank.add_argument("--epsilon", type=float, default=1e-9, help="tie tolerance on normalized scores")
    rank.add_argument("--aggregate", choices=["run", "scenario"], default="run",
                      help="compare agents per (scenario, run) or on per-scenario means")
    rank.set_defaults(func=cmd_rank)

    report = sub.add_parser("report", help="write report.md from results and ranking tables")
    report.add_argument("--results", help="default: <out>/results.jsonl")
    report.add_argument("--out", default="out")
    report.add_argument("--manifest", help="supplies scenario tags for the correlation section")
    report.set_defaults(func=cmd_report)

    validate = sub.add_parser("validate", help="check a manifest")
    validate.add_argument("--manifest", required=True)
    validate.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
