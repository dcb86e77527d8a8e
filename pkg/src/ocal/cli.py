"""Command line entry point."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from ocal import constants, descriptions
from ocal.context import Context
from ocal.errors import OcalError
from ocal.harness import aggregate, emit_curves, run_grid, validate_grid
from ocal.learners import LEARNER_DESCRIPTIONS
from ocal.signatures import GridSpec
from ocal.store import load_results
from ocal.strategies import STRATEGY_DESCRIPTIONS

logger = logging.getLogger(__name__)


def _read_grid(path: str) -> GridSpec:
    return GridSpec.model_validate_json(Path(path).read_text(encoding="utf-8"))


def _split_names(raw: List[str]) -> List[str]:
    names: List[str] = []
    for item in raw:
        names.extend(part.strip() for part in item.split(",") if part.strip())
    return names


def build_parser() -> argparse.ArgumentParser:
    """Create the argument parser with all subcommands."""
    parser = argparse.ArgumentParser(
        prog="ocal",
        description=descriptions.PROGRAM_DESCRIPTION,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--log-level", default=None, help="Logging level (default: OCAL_LOG_LEVEL or INFO).")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, text: str) -> argparse.ArgumentParser:
        return sub.add_parser(
            name,
            help=text.splitlines()[0],
            description=text,
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )

    run = add("run", descriptions.RUN_DESCRIPTION)
    run.add_argument("config")
    run.add_argument("--results-dir", default=None)
    run.add_argument("--workers", type=int, default=None)
    run.add_argument("--audit", action="store_true")

    validate = add("validate", descriptions.VALIDATE_DESCRIPTION)
    validate.add_argument("config")

    summarize = add("summarize", descriptions.SUMMARIZE_DESCRIPTION)
    summarize.add_argument("results_dir")
    summarize.add_argument("--group-by", nargs="+", default=["strategy"])
    summarize.add_argument("--stat", choices=["median", "mean"], default="median")
    summarize.add_argument("--summary", nargs="+", default=["qr"])
    summarize.add_argument("--metric", default="mcc")

    curves = add("curves", descriptions.CURVES_DESCRIPTION)
    curves.add_argument("results_dir")
    curves.add_argument("-o", "--out", required=True)

    add("list-strategies", descriptions.LIST_STRATEGIES_DESCRIPTION)
    add("list-learners", descriptions.LIST_LEARNERS_DESCRIPTION)
    return parser


def _settings(args: argparse.Namespace) -> Context:
    overrides = {}
    if getattr(args, "workers", None) is not None:
        overrides["workers"] = args.workers
    if getattr(args, "results_dir", None) is not None and args.command == "run":
        overrides["results_dir"] = args.results_dir
    if getattr(args, "audit", False):
        overrides["audit"] = True
    if args.log_level is not None:
        overrides["log_level"] = args.log_level
    return Context(**overrides)


def _cmd_run(args: argparse.Namespace, settings: Context) -> int:
    summaries = run_grid(_read_grid(args.config), settings, Path(settings.results_dir))
    failed = [s for s in summaries if s.status in ("failed", "infeasible")]
    for s in failed:
        print(f"{s.fingerprint[:12]} {s.status}: {s.error}", file=sys.stderr)
    print(f"{len(summaries)} cells, {len(failed)} failed -> {settings.results_dir}")
    return 1 if failed else 0


def _cmd_validate(args: argparse.Namespace, settings: Context) -> int:
    cells = validate_grid(_read_grid(args.config))
    excluded = 0
    for cell in cells:
        if cell.gate.ok:
            print(f"ok        {cell.describe()}")
        else:
            excluded += 1
            print(f"excluded  {cell.describe()}: {cell.gate.reason}")
    print(f"{len(cells) - excluded} feasible, {excluded} excluded")
    return 1 if excluded else 0


def _cmd_summarize(args: argparse.Namespace, settings: Context) -> int:
    results = load_results(Path(args.results_dir))
    table = aggregate(
        [summary for summary, _ in results],
        group_by=_split_names(args.group_by),
        statistic=args.stat,
        which=_split_names(args.summary),
        metric=args.metric,
    )
    print(table.to_string(index=False))
    return 0


def _cmd_curves(args: argparse.Namespace, settings: Context) -> int:
    written = emit_curves(load_results(Path(args.results_dir)), Path(args.out))
    print(f"wrote {len(written)} files to {args.out}")
    return 0


def _cmd_list_strategies(args: argparse.Namespace, settings: Context) -> int:
    for name in constants.STRATEGY_NAMES:
        print(f"{name:<10} {STRATEGY_DESCRIPTIONS[name]}")
    return 0


def _cmd_list_learners(args: argparse.Namespace, settings: Context) -> int:
    for name in constants.LEARNERS:
        print(f"{name:<10} {LEARNER_DESCRIPTIONS[name]}")
    return 0


COMMANDS = {
    "run": _cmd_run,
    "validate": _cmd_validate,
    "summarize": _cmd_summarize,
    "curves": _cmd_curves,
    "list-strategies": _cmd_list_strategies,
    "list-learners": _cmd_list_learners,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Run the command line and return the exit status."""
    load_dotenv()
    args = build_parser().parse_args(argv)
    settings = _settings(args)
    logging.basicConfig(
        level=settings.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )
    try:
        return COMMANDS[args.command](args, settings)
    except (OcalError, ValidationError, OSError) as exc:
        logger.error("%s", exc)
        return 2


if __name__ == "__main__":
    sys.exit(main())
