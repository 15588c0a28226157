"""Command-line front end.

    ucopt run <config> <scenario|all> [--out DIR] [--jobs N]
    ucopt compare <dirA> <dirB> [--out DIR]
    ucopt validate <config>

Each error class maps to its own exit status (see ``ExitCode``).
"""

from __future__ import annotations

import argparse
import enum
import logging
import sys
from pathlib import Path

from . import __version__
from .config import load_document, load_scenarios, validate_document
from .errors import (
    ConfigError,
    ConfigParseError,
    DivergenceError,
    IllPosedSpecError,
    MismatchedScenarioError,
)
from .io import read_bundle, write_bundle, write_report
from .sim.runner import compare_dicts, run_many

log = logging.getLogger("ucopt")


class ExitCode(enum.IntEnum):
    OK = 0
    USAGE = 2
    MISSING_FILE = 3
    PARSE_ERROR = 4
    UNKNOWN_SCENARIO = 5
    INVALID_CONFIG = 6
    DIVERGENCE = 7
    MISMATCHED = 8
    MISSING_METRICS = 9
    ILL_POSED = 10


def _err(msg):
    print(f"error: {msg}", file=sys.stderr)


def _load(config) -> tuple[dict | None, ExitCode]:
    try:
        return load_scenarios(config), ExitCode.OK
    except FileNotFoundError:
        _err(f"config file not found: {config}")
        return None, ExitCode.MISSING_FILE
    except ConfigParseError as exc:
        _err(str(exc))
        return None, ExitCode.PARSE_ERROR
    except ConfigError as exc:
        _err(str(exc))
        for v in exc.violations:
            print(f"  - {v}", file=sys.stderr)
        ill = any("ill-posed" in v for v in exc.violations)
        return None, ExitCode.ILL_POSED if ill else ExitCode.INVALID_CONFIG


def cmd_run(config, scenario, out_dir="runs", jobs=1) -> int:
    scenarios, code = _load(config)
    if scenarios is None:
        return code
    if scenario == "all":
        chosen = list(scenarios.values())
    elif scenario in scenarios:
        chosen = [scenarios[scenario]]
    else:
        _err(f"unknown scenario {scenario!r}; known: {', '.join(sorted(scenarios))}")
        return ExitCode.UNKNOWN_SCENARIO
    try:
        records = run_many(chosen, jobs=jobs)
    except IllPosedSpecError as exc:
        _err(str(exc))
        return ExitCode.ILL_POSED
    except DivergenceError as exc:
        _err(str(exc))
        return ExitCode.DIVERGENCE
    out = Path(out_dir)
    for rec in records:
        # a single scenario writes straight into out_dir
        target = out if len(records) == 1 and scenario != "all" else out / rec.scenario.name
        write_bundle(rec, target)
        m = rec.metrics
        print(
            f"{rec.scenario.name}: peak_bus_deviation={m.peak_bus_deviation:.6g} V "
            f"current_overshoot={m.current_overshoot:.6g} A "
            f"settling_time={m.settling_time:.6g} s -> {target}"
        )
    return ExitCode.OK


def cmd_compare(dir_a, dir_b, out_dir=None) -> int:
    bundles = []
    for d in (dir_a, dir_b):
        if not Path(d).is_dir():
            _err(f"run directory not found: {d}")
            return ExitCode.MISSING_FILE
        try:
            bundles.append(read_bundle(d))
        except FileNotFoundError:
            _err(f"no metrics.json in {d}")
            return ExitCode.MISSING_METRICS
    a, b = bundles
    try:
        report = compare_dicts(
            a["scenario"]["name"], a["metrics"], a["scenario"],
            b["scenario"]["name"], b["metrics"], b["scenario"],
        )
    except MismatchedScenarioError as exc:
        _err(str(exc))
        return ExitCode.MISMATCHED
    print(report.table())
    if out_dir is not None:
        write_report(report, out_dir)
    return ExitCode.OK


def cmd_validate(config) -> int:
    try:
        doc = load_document(config)
    except FileNotFoundError:
        _err(f"config file not found: {config}")
        return ExitCode.MISSING_FILE
    except ConfigParseError as exc:
        _err(str(exc))
        return ExitCode.PARSE_ERROR
    problems = validate_document(doc)
    if not problems:
        print(f"{config}: valid")
        return ExitCode.OK
    print(f"{config}: {len(problems)} violation(s)")
    for p in problems:
        print(f"  - {p}")
    return ExitCode.INVALID_CONFIG


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ucopt", description="Ultra-capacitor optimal-control simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="simulate one scenario (or all) and write CSV + metrics")
    r.add_argument("config")
    r.add_argument("scenario", help="scenario name, or 'all'")
    r.add_argument("--out", default="runs", help="output directory (default: runs)")
    r.add_argument("--jobs", type=int, default=1, help="worker processes for 'all'")

    c = sub.add_parser("compare", help="compare two run bundles")
    c.add_argument("dir_a")
    c.add_argument("dir_b")
    c.add_argument("--out", default=None, help="also write comparison.json/.txt here")

    v = sub.add_parser("validate", help="list every violation in a config without running")
    v.add_argument("config")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.command == "run":
        if args.jobs < 1:
            _err("--jobs must be >= 1")
            return int(ExitCode.USAGE)
        code = cmd_run(args.config, args.scenario, args.out, args.jobs)
    elif args.command == "compare":
        code = cmd_compare(args.dir_a, args.dir_b, args.out)
    else:
        code = cmd_validate(args.config)
    return int(code)


if __name__ == "__main__":
    sys.exit(main())
