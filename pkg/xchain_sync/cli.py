# -*- coding = utf-8 -*-
# @Time: 2026/09/09 09:40
# @Author: xchain-sync developers
# @Site:
# @File: cli.py
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import List, Optional

from rich.console import Console
from rich.table import Table

from xchain_sync._version import __version__
from xchain_sync.codec import golden_fixtures
from xchain_sync.common.enums import Verdict
from xchain_sync.common.errors import SyncError
from xchain_sync.common.logger import logger, set_level
from xchain_sync.schema.sim_model import PropertyReport
from xchain_sync.sim_harness import (
    DEFAULT_BOUND,
    enumerate_interleavings,
    load_scenario,
    run_scenario,
    write_trace,
)

VERDICT_STYLE = {Verdict.PASS: "green", Verdict.FAIL: "bold red", Verdict.SKIPPED: "yellow"}


def show_report(report: PropertyReport, console: Console | None = None) -> str:
    table = Table(title=f"{report.scenario} (seed {report.seed})", show_lines=False)
    table.add_column("property", style="cyan")
    table.add_column("verdict", justify="center")
    table.add_column("detail", style="dim")
    rows = [(name.value, verdict) for name, verdict in report.verdicts.items()]
    rows += [(f"  {name}", verdict) for name, verdict in report.checks.items()]
    for name, verdict in rows:
        style = VERDICT_STYLE[verdict.verdict]
        table.add_row(name, f"[{style}]{verdict.verdict.value}[/{style}]", verdict.detail)
    if report.explored_states:
        table.add_row("explored states", str(report.explored_states), "")
        table.add_row("orderings", str(report.terminal_branches), "")
    for late in report.deadline_violations:
        table.add_row("deadline", "[yellow]late[/yellow]", late)
    (console or Console()).print(table)
    record_console = Console(record=True, width=120)
    record_console.print(table)
    return record_console.export_text()


def _write_report(report: PropertyReport, path: Optional[str]) -> None:
    if path:
        Path(path).write_text(report.model_dump_json(indent=2), encoding="utf-8")


def cmd_run(args: argparse.Namespace) -> int:
    cfg = load_scenario(args.scenario)
    if args.seed is not None:
        cfg = cfg.model_copy(update={"seed": args.seed})
    events, report = run_scenario(cfg)
    if args.trace_out:
        write_trace(events, args.trace_out)
    _write_report(report, args.report_out)
    show_report(report)
    return 0 if report.passed else 1


def cmd_explore(args: argparse.Namespace) -> int:
    cfg = load_scenario(args.scenario)
    report = enumerate_interleavings(cfg, bound=args.bound, honor_revoke_skip=not args.no_revoke_skip)
    _write_report(report, args.report_out)
    show_report(report)
    return 0 if report.passed else 1


def cmd_fixtures(args: argparse.Namespace) -> int:
    text = json.dumps(golden_fixtures(), indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xchain-sync", description="cross-chain state sync simulator")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default="WARNING")
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="simulate a scenario and check its properties")
    run.add_argument("--scenario", required=True)
    run.add_argument("--seed", type=int)
    run.add_argument("--trace-out")
    run.add_argument("--report-out")
    run.set_defaults(handler=cmd_run)

    explore = commands.add_parser("explore", help="enumerate every ordering of the skip-vs-block race")
    explore.add_argument("--scenario", required=True)
    explore.add_argument("--bound", type=int, default=DEFAULT_BOUND)
    explore.add_argument("--no-revoke-skip", action="store_true", help="chains ignore revoke-skip signals")
    explore.add_argument("--report-out")
    explore.set_defaults(handler=cmd_explore)

    fixtures = commands.add_parser("fixtures", help="emit golden encodings and digests")
    fixtures.add_argument("--out")
    fixtures.set_defaults(handler=cmd_fixtures)
    return parser


def main(argv: List[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    set_level(args.log_level)
    try:
        return args.handler(args)
    except SyncError as exc:
        logger.error("{}: {}", type(exc).__name__, exc)
        return 2
    except Exception:
        logger.exception("unexpected failure")
        return 3


if __name__ == "__main__":
    sys.exit(main())
