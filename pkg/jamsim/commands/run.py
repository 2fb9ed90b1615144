import argparse

from jamsim.commands.common import (
    EXIT_OK,
    EXIT_RUN_FAILED,
    add_common_arguments,
    output_dir,
    parse_int_list,
    resolve_config,
)
from jamsim.core.errors import ConfigError
from jamsim.services.harness import run_sweep
from jamsim.services.outputs import emit_outputs


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("run", help="run every seed of a single scenario")
    add_common_arguments(parser, helpers_help="helper count for this scenario")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    helpers = parse_int_list(args.helpers, "--helpers")
    if helpers is not None and len(helpers) != 1:
        raise ConfigError("run takes a single --helpers value; use sweep for several")
    config = resolve_config(args, helper_count=helpers[0] if helpers else None)
    result = run_sweep(config, [config.helper_count])
    target = output_dir(args)
    written = emit_outputs(result, target)
    print(f"{len(written)} files written to {target}; {len(result.failures)} failed runs")
    return EXIT_OK if result.succeeded else EXIT_RUN_FAILED
