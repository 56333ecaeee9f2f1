"""Command-line front end.

    fixlab run <scenario> [--out DIR]
    fixlab classify <scenario> [--out DIR]
    fixlab uniqueness <scenario> [--out DIR]
    fixlab list-maps [--json]

Exit status: 0 when the task ran and every invariant check passed (a run that
does not converge is still a valid result), 1 when an invariant check failed,
2 for bad scenario files or I/O errors.
"""
from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from .mappings import catalog
from .scenario import OUT_DIR_ENV, ScenarioError, execute, load_scenario


def list_maps(as_json: bool = False, stream=None) -> None:
    stream = stream or sys.stdout
    rows = catalog()
    if as_json:
        stream.write(json.dumps(rows, indent=2) + "\n")
        return
    for row in rows:
        params = "; ".join(row["params"]) or "none"
        closed = "yes" if row["closed_form"] else "no"
        stream.write(f"{row['kind']}\n")
        stream.write(f"    params:      {params}\n")
        stream.write(f"    domain:      {row['domain']}\n")
        stream.write(f"    closed form: {closed}\n")
        stream.write(f"    note:        {row['note']}\n")


def _task(args) -> int:
    try:
        scenario = load_scenario(args.scenario)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        summary = execute(scenario, out=args.out, task=args.command)
    except (OSError, ScenarioError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(f"{summary.scenario}: {summary.task} -> {summary.status} ({summary.duration_s:.3f} s)")
    for key, value in summary.metrics.items():
        if isinstance(value, (int, float, str)) or value is None:
            print(f"  {key}: {value}")
    if summary.task == "classify":
        for cid, m in summary.metrics["classes"].items():
            print(f"  {cid:<20} {m['verdict']:<11} max_ratio={m['max_ratio']!r}")
    if summary.sparkline:
        print(f"  steps: {summary.sparkline}")
    for name, passed in summary.checks.items():
        print(f"  check {name}: {'pass' if passed else 'FAIL'}")
    for note in summary.notes:
        print(f"  note: {note}")
    if "task_completed" in summary.checks and not summary.checks["task_completed"]:
        return 2
    return summary.exit_code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fixlab", description="Fixed-point iteration laboratory")
    sub = parser.add_subparsers(dest="command", required=True)
    for verb, help_ in (
        ("run", "Picard iteration from x0 with diagnostics"),
        ("classify", "sample-based contraction-class certificates"),
        ("uniqueness", "multi-start limit comparison"),
    ):
        p = sub.add_parser(verb, help=help_)
        p.add_argument("scenario", help="scenario file")
        p.add_argument("--out", default=None, help=f"output directory (default: scenario `out`, then ${OUT_DIR_ENV}/<name>)")
        p.set_defaults(func=_task)
    p = sub.add_parser("list-maps", help="print the map catalog")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=lambda args: list_maps(args.json) or 0)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
