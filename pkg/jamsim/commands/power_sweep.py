import argparse

from jamsim.commands.common import (
    EXIT_OK,
    EXIT_RUN_FAILED,
    add_common_arguments,
    output_dir,
    parse_float_list,
    parse_int_list,
    resolve_config,
)
from jamsim.core.errors import ConfigError
from jamsim.services.harness import run_power_sweep
from jamsim.services.outputs import emit_power_sweep


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("power-sweep", help="stationary against mobile helpers over helper power")
    add_common_arguments(parser, helpers_help="helper count (default JAMSIM_HELPER_COUNT)")
    parser.add_argument("--jnnr", help="comma-separated JNNR values in dB (default JAMSIM_JNNR_SWEEP_DB)")
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    helpers = parse_int_list(args.helpers, "--helpers")
    if helpers is not None and len(helpers) != 1:
        raise ConfigError("power-sweep takes a single --helpers value")
    config = resolve_config(
        args,
        helper_count=helpers[0] if helpers else None,
        jnnr_sweep_db=parse_float_list(args.jnnr, "--jnnr"),
    )
    result = run_power_sweep(config, config.helper_count, config.jnnr_sweep_db)
    target = output_dir(args)
    written = emit_power_sweep(result, target)
    print(f"{len(written)} files written to {target}; {len(result.failures)} failed runs")
    return EXIT_OK if result.succeeded else EXIT_RUN_FAILED
