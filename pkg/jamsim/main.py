import argparse
import logging
import sys
from collections.abc import Sequence

from pydantic import ValidationError

from jamsim import __version__
from jamsim.commands import diag_field, power_sweep, run, sweep
from jamsim.commands.common import EXIT_CONFIG_ERROR, EXIT_RUN_FAILED
from jamsim.core.config import get_settings
from jamsim.core.errors import ConfigError, SimulationError
from jamsim.core.logging import configure_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="jamsim",
        description="Mobile cooperative jamming: helper motion control for physical-layer secrecy.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (run, sweep, diag_field, power_sweep):
        command.register(subparsers)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    settings = get_settings()
    configure_logging(settings.log_level, settings.log_format)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits with 2 on usage errors, matching the config error code.
        return int(exc.code or 0)

    logger.info("Command started", extra={"app": settings.app_name, "env": settings.app_env, "command": args.command})
    try:
        return args.handler(args)
    except (ConfigError, ValidationError) as exc:
        logger.error("Invalid configuration", extra={"command": args.command, "detail": str(exc)})
        return EXIT_CONFIG_ERROR
    except SimulationError as exc:
        logger.error("Simulation failed", extra={"command": args.command, "code": exc.code, "detail": str(exc)})
        return EXIT_RUN_FAILED
    except OSError as exc:
        logger.error("Could not write outputs", extra={"command": args.command, "detail": str(exc)})
        return EXIT_RUN_FAILED


if __name__ == "__main__":
    sys.exit(main())
