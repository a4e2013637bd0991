"""Command-line entry point: ``dls <command> --config FILE --out DIR``."""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .config import load_config, resolve_seed
from .exceptions import DLSError
from .io import load_menu
from .report import (emit_report, run_calibrate, run_learn, run_optimize, run_report, run_simulate,
                     run_utilities)

COMMANDS = {
    "optimize": "solve the profit-maximising single-crossing menu",
    "learn": "random search over daily menus",
    "simulate": "run one day against a posted menu and book the welfare split",
    "utilities": "dump the recruitment-utility tables",
    "calibrate": "fit customer types from recorded events and a sample menu",
    "report": "compare QP and learned menus and emit profit and welfare tables",
}


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


class _Parser(argparse.ArgumentParser):
    """Usage errors print one line and exit with status 2."""

    def error(self, message):
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dls", description="Direct load scheduling incentive design.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="command", parser_class=_Parser)
    for name, help_text in COMMANDS.items():
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--config", required=True, help="scenario file of key = value lines")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None, help="overrides DLS_SEED and the config seed")
        if name in ("learn", "report"):
            p.add_argument("--days", type=int, default=None, help="learning days (default from config)")
        if name == "optimize":
            p.add_argument("--grid-step", type=_positive_float, default=None,
                           help="also solve the exhaustive grid oracle at this step")
        if name == "simulate":
            p.add_argument("--menu", default=None, help="menu file to post instead of the QP menu")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        seed, source = resolve_seed(args.seed, cfg.seed)
        cfg = cfg.with_seed(seed)
        if args.command == "optimize":
            out = run_optimize(cfg, args.grid_step)
        elif args.command == "learn":
            out = run_learn(cfg, args.days)
        elif args.command == "simulate":
            out = run_simulate(cfg, load_menu(args.menu) if args.menu else None)
        elif args.command == "utilities":
            out = run_utilities(cfg)
        elif args.command == "calibrate":
            out = run_calibrate(cfg)
        else:
            out = run_report(cfg, args.days)
        out.seed_source = source
        emit_report(out, args.out)
    except (DLSError, OSError, ValueError) as exc:
        print(f"dls {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
