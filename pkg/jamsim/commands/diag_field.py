import argparse

from jamsim.commands.common import EXIT_OK, add_common_arguments, output_dir, resolve_config
from jamsim.services.channel_field import field_raster
from jamsim.services.harness import build_field, place_helpers, plane_bounds
from jamsim.services.outputs import emit_field_raster


def register(subparsers: argparse._SubParsersAction) -> None:
    parser = subparsers.add_parser("diag-field", help="dump |alpha| of the Bob and Eve fading maps on a grid")
    add_common_arguments(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = resolve_config(args)
    seed = config.seeds[0]
    layout = place_helpers(config, config.helper_count, seed)
    rows = field_raster(build_field(config, seed, layout), plane_bounds(config), config.raster_resolution)
    path = emit_field_raster(rows, output_dir(args))
    print(f"{len(rows)} raster points for seed {seed} written to {path}")
    return EXIT_OK
