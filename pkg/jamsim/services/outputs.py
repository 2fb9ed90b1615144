import csv
import logging
from collections.abc import Iterable, Sequence
from pathlib import Path

import matplotlib as mpl
from matplotlib.figure import Figure
from pydantic import BaseModel

from jamsim import __version__
from jamsim.core.config import get_settings
from jamsim.schemas import AggregateRow, FailureRow, PowerSweepRow, ScenarioConfig, TrajectoryRow
from jamsim.services.harness import ExperimentResult, PowerSweepResult

logger = logging.getLogger(__name__)

TRAJECTORIES_FILE = "trajectories.csv"
AGGREGATE_FILE = "aggregate.csv"
FAILURES_FILE = "failures.csv"
RATE_PLOT_FILE = "rate_vs_step.svg"
MANIFEST_FILE = "manifest.txt"
POWER_SWEEP_FILE = "power_sweep.csv"
POWER_PLOT_FILE = "power_sweep.svg"
FIELD_RASTER_FILE = "field_raster.csv"
FIELD_RASTER_COLUMNS = ["x", "y", "abs_alpha_bob", "abs_alpha_eve"]

# Fixed SVG element ids and no timestamp keep reruns byte-identical.
mpl.rcParams["svg.hashsalt"] = "jamsim"
_SVG_METADATA = {"Date": None}


def write_rows(path: Path, columns: Sequence[str], rows: Iterable[BaseModel | dict]) -> Path:
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=list(columns), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row.model_dump() if isinstance(row, BaseModel) else row)
    return path


def _columns(model: type[BaseModel]) -> list[str]:
    return list(model.model_fields)


def plot_rate_vs_step(result: ExperimentResult, path: Path) -> Path:
    """Median max(0, R) per helper count with the interquartile band and the R_sup line."""
    fig = Figure(figsize=(7.0, 4.5))
    ax = fig.subplots()
    for count in result.helper_counts:
        rows = [row for row in result.aggregate_rows if row.helper_count == count]
        if not rows:
            continue
        steps = [row.step for row in rows]
        ax.plot(steps, [max(0.0, row.median_rate) for row in rows], label=f"{count} helper{'s' if count > 1 else ''}")
        ax.fill_between(
            steps,
            [max(0.0, row.q25) for row in rows],
            [max(0.0, row.q75) for row in rows],
            alpha=0.15,
        )
    ax.axhline(result.rate_supremum, color="black", linestyle="--", linewidth=1.0, label="R_sup")
    ax.set_xlabel("motion step")
    ax.set_ylabel("secrecy rate [bits/channel use]")
    ax.set_ylim(bottom=0.0)
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    return path


def plot_power_sweep(result: PowerSweepResult, path: Path) -> Path:
    fig = Figure(figsize=(7.0, 4.5))
    ax = fig.subplots()
    levels = [row.jnnr_db for row in result.rows]
    ax.plot(levels, [max(0.0, row.median_stationary_rate) for row in result.rows], marker="o", label="stationary")
    ax.plot(levels, [max(0.0, row.median_mobile_rate) for row in result.rows], marker="s", label="mobile")
    if result.rows:
        ax.axhline(result.rows[0].r_sup, color="black", linestyle="--", linewidth=1.0, label="R_sup")
    ax.set_xlabel("JNNR [dB]")
    ax.set_ylabel("median secrecy rate [bits/channel use]")
    ax.set_title(f"{result.helper_count} helper{'s' if result.helper_count > 1 else ''}")
    ax.grid(True, alpha=0.3)
    ax.legend(loc="lower right", fontsize="small")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata=_SVG_METADATA)
    return path


def manifest_lines(config: ScenarioConfig, helper_counts: Sequence[int], telemetry: dict[str, int]) -> list[str]:
    """Comment lines carry run metadata; the rest re-parses as a scenario config."""
    settings = get_settings()
    lines = [
        f"# jamsim {__version__}",
        f"# app: {settings.app_name} ({settings.app_env})",
        f"# helper_counts: {','.join(str(count) for count in helper_counts)}",
    ]
    lines.extend(f"# telemetry {name}: {count}" for name, count in telemetry.items())
    lines.extend(config.to_env_lines())
    return lines


def write_manifest(path: Path, config: ScenarioConfig, helper_counts: Sequence[int], telemetry: dict[str, int]) -> Path:
    path.write_text("\n".join(manifest_lines(config, helper_counts, telemetry)) + "\n", encoding="utf-8")
    return path


def emit_outputs(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    written = [
        write_rows(target / TRAJECTORIES_FILE, _columns(TrajectoryRow), result.trajectory_rows),
        write_rows(target / AGGREGATE_FILE, _columns(AggregateRow), result.aggregate_rows),
        write_rows(target / FAILURES_FILE, _columns(FailureRow), result.failures),
        plot_rate_vs_step(result, target / RATE_PLOT_FILE),
        write_manifest(target / MANIFEST_FILE, result.config, result.helper_counts, result.telemetry),
    ]
    logger.info("Outputs written", extra={"outDir": str(target), "files": [path.name for path in written]})
    return written


def emit_power_sweep(result: PowerSweepResult, out_dir: str | Path) -> list[Path]:
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    written = [
        write_rows(target / POWER_SWEEP_FILE, _columns(PowerSweepRow), result.rows),
        write_rows(target / FAILURES_FILE, _columns(FailureRow), result.failures),
        plot_power_sweep(result, target / POWER_PLOT_FILE),
        write_manifest(target / MANIFEST_FILE, result.config, [result.helper_count], result.telemetry),
    ]
    logger.info("Outputs written", extra={"outDir": str(target), "files": [path.name for path in written]})
    return written


def emit_field_raster(rows: Sequence[dict[str, float]], out_dir: str | Path) -> Path:
    target = Path(out_dir)
    target.mkdir(parents=True, exist_ok=True)
    return write_rows(target / FIELD_RASTER_FILE, FIELD_RASTER_COLUMNS, rows)
