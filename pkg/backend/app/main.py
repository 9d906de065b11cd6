"""
==============================================================================
DDSYNTH - DISTURBANCE DECOUPLING CONTROLLER SYNTHESIS
==============================================================================

Main Application Entry Point
----------------------------
This module parses the command line, loads settings, configures logging
and dispatches to the registered subcommands.

Architecture Overview:
---------------------
┌─────────────────────────────────────────────────────────────────┐
│                       ddsynth command line                      │
├─────────────────────────────────────────────────────────────────┤
│  ┌──────────┐  ┌───────┐  ┌──────┐  ┌────┐  ┌───────┐  ┌─────┐  │
│  │powergrid │  │ synth │  │ eval │  │ mc │  │ sweep │  │ sim │  │
│  └────┬─────┘  └───┬───┘  └──┬───┘  └─┬──┘  └───┬───┘  └──┬──┘  │
│       └────────────┴─────┬───┴────────┴─────────┴─────────┘     │
│                          ▼                                      │
│   ┌─────────────────────────────────────────────────────────┐   │
│   │  control: geometry · h2 · ddpf · sim · conic backend    │   │
│   └─────────────────────────────────────────────────────────┘   │
└─────────────────────────────────────────────────────────────────┘

Exit codes: 0 success, 1 usage or input error, 2 infeasible, 3 numerical failure.

Author: DDSynth Team
Version: 1.0.0
License: MIT
==============================================================================
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from app import __version__
from app.commands import evaluate, examples, mc, powergrid, simulate, sweep, synth
from app.config import ConfigError, load_settings
from app.control.errors import SynthesisError

logger = logging.getLogger("ddsynth")

EXIT_USAGE = 1


class UsageError(Exception):
    """Raised instead of exiting on bad command-line usage"""


class CommandParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# =============================================================================
# COMMAND REGISTRATION
# =============================================================================

COMMANDS = [powergrid, synth, evaluate, mc, sweep, simulate, examples]


def build_parser() -> argparse.ArgumentParser:
    parser = CommandParser(prog="ddsynth", description="Disturbance decoupling controller synthesis")
    parser.add_argument("--version", action="version", version=f"ddsynth {__version__}")
    parser.add_argument("--config", type=Path, help="JSON settings file")
    parser.add_argument("--log-level", dest="log_level", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    parser.add_argument("--workers", type=int, help="parallel jobs for mc and sweep")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CommandParser)
    for command in COMMANDS:
        command.register(subparsers)
    # after the subcommand too; the later occurrence wins
    for subparser in subparsers.choices.values():
        subparser.add_argument("--config", type=Path, default=argparse.SUPPRESS, help="JSON settings file")
    return parser


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper(), logging.INFO),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
        force=True,
    )


# =============================================================================
# ENTRY POINT
# =============================================================================

def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        overrides = {
            "log_level": args.log_level,
            "workers": args.workers,
            "max_iters": getattr(args, "max_iters", None),
            "gamma": getattr(args, "gamma", None),
        }
        settings = load_settings(args.config, **overrides)
    except (UsageError, ConfigError) as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE

    configure_logging(settings.log_level)
    try:
        return args.handler(args, settings)
    except SynthesisError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    except (OSError, ValidationError, ValueError) as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
