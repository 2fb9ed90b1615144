import argparse

from jamsim.commands.common import (
    EXIT_OK,
    EXIT_RUN_FAILED,
    add_common_arguments,
    output_dir,
    parse_int_list,
    resolve_config,
)
from jamsim.services.harness import run_sweep
from jamsim.services.outputs import emit_outputs


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("sweep", help="secrecy rate against motion step for several helper counts")
    add_common_arguments(parser, helpers_help="comma-separated helper counts (default JAMSIM_HELPER_COUNTS)")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = resolve_config(args, helper_counts=parse_int_list(args.helpers, "--helpers"))
    result = run_sweep(config, config.helper_counts)
    target = output_dir(args)
    written = emit_outputs(result, target)
    print(f"{len(written)} files written to {target}; {len(result.failures)} failed runs")
    return EXIT_OK if result.succeeded else EXIT_RUN_FAILED
