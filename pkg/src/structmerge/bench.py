"""``structmerge-bench``: compare two merge tools over a scenario corpus."""

from __future__ import annotations

import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

from .harness import CommandTool, ScenarioError, builtin_tool, discover, report, run_scenario

BUILTIN_PREFIX = "builtin:"


def make_tool(spec: str, name: Optional[str] = None):
    """``builtin:NAME`` for an in-process tool, anything else is a command line."""
    if spec.startswith(BUILTIN_PREFIX):
        tool = builtin_tool(spec[len(BUILTIN_PREFIX):])
        if name:
            tool.name = name
        return tool
    return CommandTool(spec, name=name)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="structmerge-bench", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="replay scenarios with two tools")
    r.add_argument("--scenarios", required=True, help="directory holding one sub-directory per scenario")
    r.add_argument("--tool-a", required=True, help="command (gets BASE LEFT RIGHT -o OUT) or builtin:NAME")
    r.add_argument("--tool-b", required=True)
    r.add_argument("--name-a", help="label for tool A in the report")
    r.add_argument("--name-b", help="label for tool B in the report")
    r.add_argument("--out", help="write the TSV table here")
    r.add_argument("--runs", type=int, default=10, help="timed runs per file, first discarded (default 10)")
    r.add_argument("--no-timing", action="store_true")
    r.add_argument("--jobs", type=int, default=1, help="scenarios replayed concurrently")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenarios = discover(args.scenarios)
    except ScenarioError as exc:
        print(f"structmerge-bench: {exc}", file=sys.stderr)
        return 2
    tool_a = make_tool(args.tool_a, args.name_a or "A")
    tool_b = make_tool(args.tool_b, args.name_b or "B")

    def one(s):
        return run_scenario(s, tool_a, tool_b, timing=not args.no_timing, runs=args.runs)

    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        reports = list(pool.map(one, scenarios))
    summary = report(reports)
    sys.stdout.write(summary.text)
    if args.out:
        Path(args.out).write_text(summary.tsv, encoding="utf-8")
    return 0


if __name__ == "__main__":
    sys.exit(main())
