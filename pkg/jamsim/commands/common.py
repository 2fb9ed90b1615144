import argparse
from pathlib import Path
from typing import Any

from jamsim.core.config import get_settings
from jamsim.core.errors import ConfigError
from jamsim.schemas import ScenarioConfig, load_scenario_config

EXIT_OK = 0
EXIT_RUN_FAILED = 1
EXIT_CONFIG_ERROR = 2


def add_common_arguments(parser: argparse.ArgumentParser, helpers_help: str | None = None) -> None:
    parser.add_argument("--config", type=Path, help="scenario file of JAMSIM_* KEY=value lines")
    parser.add_argument("--out", type=Path, help="output directory (default: DEFAULT_OUTPUT_DIR)")
    parser.add_argument("--seeds", help="seed count N (seeds 0..N-1) or a comma-separated seed list")
    parser.add_argument("--steps", type=int, help="motion steps per trajectory")
    parser.add_argument("--multi-start", type=int, help="extra controller runs from the best screened random starts")
    if helpers_help:
        parser.add_argument("--helpers", help=helpers_help)


def parse_seeds(value: str | None) -> list[int] | None:
    """``"20"`` means seeds 0..19; anything with a comma is taken literally."""
    if value is None:
        return None
    text = value.strip()
    try:
        if "," not in text:
            count = int(text)
            if count < 1:
                raise ConfigError("--seeds count must be at least 1")
            return list(range(count))
        return [int(item) for item in text.split(",") if item.strip()]
    except ValueError as exc:
        raise ConfigError(f"invalid --seeds value {value!r}") from exc


def parse_int_list(value: str | None, flag: str) -> list[int] | None:
    if value is None:
        return None
    try:
        return [int(item) for item in value.split(",") if item.strip()]
    except ValueError as exc:
        raise ConfigError(f"invalid {flag} value {value!r}") from exc


def parse_float_list(value: str | None, flag: str) -> list[float] | None:
    if value is None:
        return None
    try:
        return [float(item) for item in value.split(",") if item.strip()]
    except ValueError as exc:
        raise ConfigError(f"invalid {flag} value {value!r}") from exc


def resolve_config(args: argparse.Namespace, **overrides: Any) -> ScenarioConfig:
    """File (or defaults and environment) first, then CLI flags."""
    config = load_scenario_config(args.config) if args.config is not None else ScenarioConfig()
    if args.steps is not None and args.steps < 0:
        raise ConfigError("--steps must be non-negative")
    if args.multi_start is not None and args.multi_start < 0:
        raise ConfigError("--multi-start must be non-negative")
    return config.with_overrides(
        seeds=parse_seeds(args.seeds),
        steps=args.steps,
        multi_start=args.multi_start,
        **overrides,
    )


def output_dir(args: argparse.Namespace) -> Path:
    return args.out if args.out is not None else Path(get_settings().default_output_dir)
