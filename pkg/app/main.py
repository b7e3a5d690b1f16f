"""Command-line entry point (``python -m app.main``)."""

import argparse
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

from app.api.commands import (
    EXIT_USAGE,
    CliConfig,
    CommandResult,
    cmd_extract,
    cmd_family_audit,
    cmd_params,
    cmd_verify,
)
from app.config import get_settings
from app.logging_config import get_logger, setup_logging

COMMANDS = {
    "params": cmd_params,
    "extract": cmd_extract,
    "family-audit": cmd_family_audit,
    "verify": cmd_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pa-toolkit", description="Universal-hashing privacy amplification toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    params = sub.add_parser("params", help="key length or distance bound")
    params.add_argument("--n", type=int)
    params.add_argument("--l", dest="ell", type=int)
    params.add_argument("--delta", type=float)
    params.add_argument("--hmin", type=float)
    params.add_argument("--eps", type=float)

    extract = sub.add_parser("extract", help="hash an input file with a given seed")
    extract.add_argument("--family", required=True)
    extract.add_argument("--seed-hex", dest="seed_hex", required=True)
    extract.add_argument("--in", dest="input_path", type=Path, required=True)
    extract.add_argument("--out", dest="output_path", type=Path, required=True)

    audit = sub.add_parser("family-audit", help="exhaustive collision audit of a family")
    audit.add_argument("--family", required=True)

    verify = sub.add_parser("verify", help="run a verification suite")
    verify.add_argument("suite")
    verify.add_argument("--trials", type=int, default=200)
    verify.add_argument("--rng-seed", dest="rng_seed", type=int, default=0)
    verify.add_argument("--report", dest="report_path", type=Path)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    settings = get_settings()
    setup_logging(debug=settings.debug)
    logger = get_logger("main")

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_USAGE if e.code else 0

    config = CliConfig(**vars(args))
    logger.debug("command_started", app_name=settings.app_name, command=config.command)
    result: CommandResult = COMMANDS[config.command](config)
    print(json.dumps(result.payload, sort_keys=True))
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
