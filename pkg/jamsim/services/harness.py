import logging
import math
from collections.abc import Sequence
from dataclasses import dataclass, field

import anyio
import numpy as np
from anyio import to_thread

from jamsim.core.config import get_settings
from jamsim.core.errors import DegenerateChannelError, PlacementError, SimulationError
from jamsim.core.logging import run_context
from jamsim.core.telemetry import (
    CELL_FAILED,
    PLACEMENT_RETRY,
    START_DROPPED,
    get_event_counts,
    record_event,
    reset_events,
)
from jamsim.models import ChannelParams, ControllerSettings, NetworkLayout, PlaneBounds, PowerConfig, TrajectoryRecord
from jamsim.schemas import AggregateRow, FailureRow, PowerSweepRow, ScenarioConfig, TrajectoryRow
from jamsim.services.channel_field import ChannelField, build_channel_field, eval_source_channels
from jamsim.services.controller import SimulationState, run_trajectory, state_designs
from jamsim.services.geometry import build_helper, layout_is_feasible
from jamsim.services.secrecy import secrecy_rate

logger = logging.getLogger(__name__)

PLACEMENT_STREAM = 3
START_STREAM = 4
MAX_PLACEMENT_DRAWS = 100


@dataclass(frozen=True)
class CellResult:
    helper_count: int
    seed: int
    jnnr_db: float
    record: TrajectoryRecord | None = None
    failure: FailureRow | None = None
    # Rate at the nominal placement, before any motion or multi-start.
    stationary_rate: float | None = None


@dataclass(frozen=True)
class ExperimentResult:
    config: ScenarioConfig
    helper_counts: tuple[int, ...]
    trajectory_rows: tuple[TrajectoryRow, ...]
    aggregate_rows: tuple[AggregateRow, ...]
    failures: tuple[FailureRow, ...]
    rate_supremum: float
    telemetry: dict[str, int]

    @property
    def succeeded(self) -> bool:
        return not self.failures


@dataclass(frozen=True)
class PowerSweepResult:
    config: ScenarioConfig
    helper_count: int
    rows: tuple[PowerSweepRow, ...]
    failures: tuple[FailureRow, ...]
    telemetry: dict[str, int] = field(default_factory=dict)

    @property
    def succeeded(self) -> bool:
        return not self.failures


def db_to_linear(value_db: float) -> float:
    return 10.0 ** (value_db / 10.0)


def rate_supremum(config: ScenarioConfig) -> float:
    """log2(1 + Bob SNR); the SNR normalization pins it for every seed and layout."""
    return math.log2(1.0 + db_to_linear(config.bob_snr_db))


def plane_bounds(config: ScenarioConfig) -> PlaneBounds:
    return PlaneBounds(0.0, 0.0, config.plane_width, config.plane_height)


def channel_params(config: ScenarioConfig, seed: int) -> ChannelParams:
    return ChannelParams(
        wavelength_lambda=config.wavelength,
        pathloss_mu=config.pathloss_exponent,
        correlation_length=config.correlation_length,
        seed=seed,
    )


def controller_settings(config: ScenarioConfig) -> ControllerSettings:
    return ControllerSettings(
        step_size=config.step_size,
        fd_step=config.resolved_fd_step,
        collision_weight=config.collision_weight,
        max_step_length=config.resolved_max_step_length,
        max_backtracks=config.max_backtracks,
    )


def _placement_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, PLACEMENT_STREAM]))


def place_helpers(config: ScenarioConfig, helper_count: int, seed: int) -> NetworkLayout:
    """Equal x spacing across the width, y at mid-height plus U[-gamma, gamma] jitter."""
    if helper_count < 1:
        raise ValueError("helper_count must be at least 1")
    bounds = plane_bounds(config)
    xs = bounds.x_min + bounds.width * (np.arange(1, helper_count + 1) - 0.5) / helper_count
    mid_y = bounds.y_min + bounds.height / 2.0
    rng = _placement_rng(seed)
    gamma = config.init_jitter_gamma
    for attempt in range(MAX_PLACEMENT_DRAWS):
        ys = mid_y + rng.uniform(-gamma, gamma, size=helper_count)
        helpers = tuple(
            build_helper((x, y), config.antennas_per_helper, config.wavelength, config.rho) for x, y in zip(xs, ys)
        )
        layout = NetworkLayout(
            alice_pos=config.alice_pos,
            bob_pos=config.bob_pos,
            eve_pos=config.eve_pos,
            helpers=helpers,
            plane_bounds=bounds,
        )
        if layout_is_feasible(layout):
            return layout
        record_event(PLACEMENT_RETRY)
        logger.debug("Placement draw rejected", extra={"attempt": attempt})
    raise PlacementError(f"no feasible placement for {helper_count} helpers in {MAX_PLACEMENT_DRAWS} draws")


def build_field(config: ScenarioConfig, seed: int, layout: NetworkLayout) -> ChannelField:
    return build_channel_field(channel_params(config, seed), layout, config.fading_model)


def build_scenario(
    config: ScenarioConfig,
    seed: int,
    helper_count: int | None = None,
    jnnr_db: float | None = None,
) -> SimulationState:
    count = helper_count if helper_count is not None else config.helper_count
    jnnr = jnnr_db if jnnr_db is not None else config.jnnr_db
    layout = place_helpers(config, count, seed)
    fading = build_field(config, seed, layout)
    h_A, g_A = eval_source_channels(fading, layout.alice_pos)
    if abs(h_A) ** 2 <= 1e-300:
        raise DegenerateChannelError("Alice-to-Bob channel is numerically zero")
    noise = config.noise_floor
    power = PowerConfig(
        source_power_Ps=db_to_linear(config.bob_snr_db) * noise / abs(h_A) ** 2,
        noise_floor_N0=noise,
        helper_budgets=(db_to_linear(jnnr) * noise,) * count,
    )
    return SimulationState(layout=layout, field=fading, power=power, h_A=h_A, g_A=g_A, seed=seed)


def _start_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, START_STREAM]))


def draw_start_layouts(config: ScenarioConfig, nominal: NetworkLayout, seed: int) -> list[NetworkLayout]:
    """Feasible placements with every helper drawn uniformly over the plane, discs kept inside it."""
    inset = nominal.plane_bounds.expanded(-config.rho / 2.0)
    rng = _start_rng(seed)
    layouts: list[NetworkLayout] = []
    for _ in range(config.multi_start_candidates):
        xs = rng.uniform(inset.x_min, inset.x_max, size=nominal.helper_count)
        ys = rng.uniform(inset.y_min, inset.y_max, size=nominal.helper_count)
        layout = nominal.with_helper_centers(np.column_stack([xs, ys]))
        if layout_is_feasible(layout):
            layouts.append(layout)
    return layouts


def screen_starts(config: ScenarioConfig, state: SimulationState) -> list[NetworkLayout]:
    """
    The ``multi_start`` drawn placements with the highest stationary secrecy
    rate, best first. Ties keep draw order.
    """
    if config.multi_start == 0:
        return []
    scored: list[tuple[float, int, NetworkLayout]] = []
    for index, layout in enumerate(draw_start_layouts(config, state.layout, state.seed)):
        try:
            _, designs = state_designs(state.with_layout(layout))
        except SimulationError:
            record_event(START_DROPPED)
            continue
        rate = secrecy_rate(state.power, state.h_A, state.g_A, designs).secrecy_rate
        scored.append((-rate, index, layout))
    scored.sort(key=lambda item: item[:2])
    return [layout for _, _, layout in scored[: config.multi_start]]


def run_multi_start(config: ScenarioConfig, state: SimulationState) -> TrajectoryRecord:
    """
    Run the controller from the nominal placement and from each screened start;
    keep the record with the highest final rate. The nominal run wins ties and
    its failures propagate; failed screened runs are dropped.
    """
    settings = controller_settings(config)
    best = run_trajectory(state, config.steps, settings)
    for start_index, layout in enumerate(screen_starts(config, state)):
        try:
            record = run_trajectory(state.with_layout(layout), config.steps, settings)
        except SimulationError as exc:
            record_event(START_DROPPED)
            logger.debug("Multi-start run dropped", extra={"startIndex": start_index, "code": exc.code})
            continue
        if record.final.secrecy_rate > best.final.secrecy_rate:
            best = record
    return best


def run_cell(config: ScenarioConfig, helper_count: int, seed: int, jnnr_db: float | None = None) -> CellResult:
    jnnr = jnnr_db if jnnr_db is not None else config.jnnr_db
    with run_context(helperCount=helper_count, seed=seed):
        try:
            state = build_scenario(config, seed, helper_count, jnnr)
            _, designs = state_designs(state)
            stationary = secrecy_rate(state.power, state.h_A, state.g_A, designs).secrecy_rate
            record = run_multi_start(config, state)
        except SimulationError as exc:
            record_event(CELL_FAILED)
            logger.warning("Simulation cell failed", extra={"code": exc.code, "detail": str(exc)})
            failure = FailureRow(helper_count=helper_count, seed=seed, code=exc.code, message=str(exc))
            return CellResult(helper_count=helper_count, seed=seed, jnnr_db=jnnr, failure=failure)
    return CellResult(helper_count=helper_count, seed=seed, jnnr_db=jnnr, record=record, stationary_rate=stationary)


async def _run_cells(
    config: ScenarioConfig,
    cells: Sequence[tuple[int, int, float | None]],
    workers: int,
) -> list[CellResult]:
    limiter = anyio.CapacityLimiter(workers)
    results: list[CellResult | None] = [None] * len(cells)

    async def run_slot(slot: int, helper_count: int, seed: int, jnnr_db: float | None) -> None:
        results[slot] = await to_thread.run_sync(run_cell, config, helper_count, seed, jnnr_db, limiter=limiter)

    async with anyio.create_task_group() as task_group:
        for slot, (helper_count, seed, jnnr_db) in enumerate(cells):
            task_group.start_soon(run_slot, slot, helper_count, seed, jnnr_db)
    return [result for result in results if result is not None]


def run_cells(
    config: ScenarioConfig,
    cells: Sequence[tuple[int, int, float | None]],
    workers: int | None = None,
) -> list[CellResult]:
    """Run cells on worker threads; results come back in the order of ``cells``."""
    pool_size = max(1, workers if workers is not None else get_settings().sweep_workers)
    return anyio.run(_run_cells, config, cells, pool_size)


def trajectory_rows(cell: CellResult) -> list[TrajectoryRow]:
    if cell.record is None:
        return []
    rows: list[TrajectoryRow] = []
    for snap in cell.record.snapshots:
        for index, (x, y) in enumerate(snap.positions):
            rows.append(
                TrajectoryRow(
                    helper_count=cell.helper_count,
                    seed=cell.seed,
                    step=snap.step,
                    helper_index=index,
                    x=float(x),
                    y=float(y),
                    phi_r=float(snap.phi[index]),
                    phi_col=float(snap.phi_col[index]),
                    objective=snap.objective,
                    secrecy_rate=snap.secrecy_rate,
                )
            )
    return rows


def aggregate_rates(rates_by_step: dict[int, list[float]], helper_count: int, r_sup: float) -> list[AggregateRow]:
    rows: list[AggregateRow] = []
    for step in sorted(rates_by_step):
        rates = np.asarray(rates_by_step[step], dtype=float)
        q25, q75 = np.percentile(rates, [25.0, 75.0])
        rows.append(
            AggregateRow(
                helper_count=helper_count,
                step=step,
                median_rate=float(np.median(rates)),
                q25=float(q25),
                q75=float(q75),
                r_sup=r_sup,
            )
        )
    return rows


def run_sweep(
    config: ScenarioConfig,
    helper_counts: Sequence[int] | None = None,
    workers: int | None = None,
) -> ExperimentResult:
    counts = tuple(helper_counts if helper_counts is not None else config.helper_counts)
    if not counts or any(count < 1 for count in counts):
        raise ValueError("helper_counts must be a non-empty list of positive integers")
    reset_events()
    cells = [(count, seed, None) for count in counts for seed in config.seeds]
    logger.info("Sweep started", extra={"helperCounts": list(counts), "seeds": len(config.seeds), "steps": config.steps})
    results = run_cells(config, cells, workers)

    r_sup = rate_supremum(config)
    rows: list[TrajectoryRow] = []
    aggregates: list[AggregateRow] = []
    failures: list[FailureRow] = []
    for count in counts:
        rates_by_step: dict[int, list[float]] = {}
        for cell in results:
            if cell.helper_count != count:
                continue
            if cell.failure is not None:
                failures.append(cell.failure)
                continue
            rows.extend(trajectory_rows(cell))
            for snap in cell.record.snapshots:
                rates_by_step.setdefault(snap.step, []).append(snap.secrecy_rate)
        aggregates.extend(aggregate_rates(rates_by_step, count, r_sup))

    telemetry = get_event_counts()
    logger.info("Sweep finished", extra={"failedCells": len(failures), "telemetry": telemetry})
    return ExperimentResult(
        config=config,
        helper_counts=counts,
        trajectory_rows=tuple(rows),
        aggregate_rows=tuple(aggregates),
        failures=tuple(failures),
        rate_supremum=r_sup,
        telemetry=telemetry,
    )


def run_power_sweep(
    config: ScenarioConfig,
    helper_count: int,
    jnnr_values_db: Sequence[float],
    workers: int | None = None,
) -> PowerSweepResult:
    """Stationary versus mobile median rate for each helper power level."""
    levels = list(dict.fromkeys(float(value) for value in jnnr_values_db))
    if not levels:
        raise ValueError("at least one JNNR value is required")
    reset_events()
    logger.info("Power sweep started", extra={"helperCount": helper_count, "levels": levels, "seeds": len(config.seeds)})
    cells = [(helper_count, seed, level) for level in levels for seed in config.seeds]
    results = run_cells(config, cells, workers)

    r_sup = rate_supremum(config)
    rows: list[PowerSweepRow] = []
    failures: list[FailureRow] = []
    for level in levels:
        stationary: list[float] = []
        mobile: list[float] = []
        for cell in results:
            if cell.jnnr_db != level:
                continue
            if cell.failure is not None:
                failures.append(cell.failure)
                continue
            stationary.append(cell.stationary_rate)
            mobile.append(cell.record.final.secrecy_rate)
        if not stationary:
            continue
        rows.append(
            PowerSweepRow(
                jnnr_db=level,
                median_stationary_rate=float(np.median(stationary)),
                median_mobile_rate=float(np.median(mobile)),
                r_sup=r_sup,
            )
        )
    telemetry = get_event_counts()
    logger.info("Power sweep finished", extra={"failedCells": len(failures), "telemetry": telemetry})
    return PowerSweepResult(
        config=config,
        helper_count=helper_count,
        rows=tuple(rows),
        failures=tuple(failures),
        telemetry=telemetry,
    )
