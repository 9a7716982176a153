"""
FracAAA - Command Line Entry Point

Runs a scenario from a JSON configuration file and writes its results:

    python -m app run <config.json> [--out DIR] [--seed N] [--log-level L]
    python -m app validate <config.json>

Exit codes: 0 success, 1 configuration error, 2 numerical failure.
"""

import argparse
import logging
import sys
from typing import List, Optional

from app.artifact_storage import ArtifactStore
from app.config import load_scenario_config
from app.errors import ConfigurationError
from app.scenarios import run_scenario
from app.utils import EXIT_OK, describe_error, exit_code_for

logger = logging.getLogger(__name__)

LOG_LEVELS = ("debug", "info", "warning", "error")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fracaaa",
        description=(
            "Mild solutions of fractional integro-differential equations "
            "with almost automorphic forcing"
        ),
    )
    parser.add_argument(
        "--log-level",
        choices=LOG_LEVELS,
        default="info",
        help="Logging verbosity (default: info)",
    )
    subcommands = parser.add_subparsers(dest="command", required=True)

    run = subcommands.add_parser("run", help="Run a scenario and write its results")
    run.add_argument("config", help="Scenario configuration (JSON)")
    run.add_argument("--out", help="Output directory (overrides output_dir)")
    run.add_argument("--seed", type=int, help="Sampling seed (overrides seed)")

    validate = subcommands.add_parser("validate", help="Validate a configuration")
    validate.add_argument("config", help="Scenario configuration (JSON)")
    return parser


def configure_logging(level: str) -> None:
    logging.basicConfig(
        level=getattr(logging, level.upper()),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


def validate_command(args: argparse.Namespace) -> int:
    config = load_scenario_config(args.config)
    print(f"Configuration valid: scenario '{config.scenario.value}'")
    return EXIT_OK


def run_command(args: argparse.Namespace) -> int:
    config = load_scenario_config(args.config)
    overrides = {}
    if args.out is not None:
        overrides["output_dir"] = args.out
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        try:
            config = config.model_validate({**config.model_dump(), **overrides})
        except ValueError as e:
            raise ConfigurationError(f"Invalid command line override: {e}") from e

    store = ArtifactStore(config.output_dir)
    report = run_scenario(config, store)
    print(f"Scenario '{report['scenario']}' completed; results in {store.output_dir}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and dispatch to the requested command.

    Args:
        argv: Command line arguments without the program name

    Returns:
        int: Process exit code
    """
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    handler = run_command if args.command == "run" else validate_command
    try:
        return handler(args)
    except Exception as e:
        code = exit_code_for(e)
        logger.error(describe_error(e))
        print(f"Error: {e}", file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
