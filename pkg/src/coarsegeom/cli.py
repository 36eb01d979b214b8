"""Command line: ``coarsegeom list`` and ``coarsegeom run <scenario> ...``.

Exit status is 0 when every executed check passed, 1 when any failed and 2
on a configuration error.
"""

from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction
from pathlib import Path

from .scenarios import InvalidScenario, dumps, exit_status, get_scenario, list_scenarios, run, scenario_from_mapping


def _fraction(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="coarsegeom", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("list", help="list built-in scenarios")
    r = sub.add_parser("run", help="run a scenario and print its JSON report")
    r.add_argument("scenario", nargs="?", help="built-in scenario name")
    r.add_argument("--file", type=Path, help="JSON scenario file: {scenario, params, checks}")
    r.add_argument("--horizon", type=int)
    r.add_argument("--radius", type=_fraction)
    r.add_argument("--support-cap", type=int)
    r.add_argument("--kmax", type=int)
    r.add_argument("--tolerance", type=float)
    r.add_argument("--out", type=Path, help="write the report here instead of stdout")
    r.add_argument("--parallel", action="store_true", help="run independent checks concurrently")
    return parser


def _scenario_from_args(args):
    overrides = {
        key: value
        for key, value in (
            ("horizon", args.horizon),
            ("radius", args.radius),
            ("support_cap", args.support_cap),
            ("kmax", args.kmax),
            ("tolerance", args.tolerance),
        )
        if value is not None
    }
    if args.file is not None:
        try:
            data = json.loads(args.file.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InvalidScenario("file", str(exc)) from None
        if args.scenario is not None:
            data.setdefault("scenario", args.scenario)
        data["params"] = {**(data.get("params") or {}), **overrides}
        return scenario_from_mapping(data)
    if args.scenario is None:
        raise InvalidScenario("scenario", "missing")
    return get_scenario(args.scenario).with_overrides(overrides)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list":
        for name, description in list_scenarios():
            print(f"{name:26s} {description}")
        return 0
    try:
        scenario = _scenario_from_args(args)
    except InvalidScenario as exc:
        print(f"invalid-scenario: {exc}", file=sys.stderr)
        return 2
    report = run(scenario, parallel=args.parallel)
    text = dumps(report)
    if args.out is not None:
        args.out.write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    for record in report["checks"]:
        print(f"{record['verdict']:>14s}  {record['name']}", file=sys.stderr)
    return exit_status(report)


if __name__ == "__main__":
    raise SystemExit(main())
