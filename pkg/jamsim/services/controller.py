"""
Decentralized artificial-potential motion controller.

Helper r descends phi_r° = w_col * phi_r^col - phi_r, where phi_r is its
leakage gain towards Eve and phi_r^col = sum_l 1 / (||p_r - p_l||^2 - rho^2)
over every other helper plus Alice, Bob and Eve. The flow p' = -grad phi_r° is
integrated with explicit Euler steps from a shared position snapshot. Steps
are capped in length, clamped to the plane and shortened by a backtracking line
search that keeps every recorded state outside all collision discs.

A helper's gradient only ever evaluates that helper's own channels; other
helpers enter through their snapshot positions alone.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from itertools import combinations

import numpy as np

from jamsim.core.errors import CollisionError, GradientStepError
from jamsim.core.telemetry import BACKTRACKED, HELPER_HELD, record_event
from jamsim.models import (
    ControllerSettings,
    ControlStep,
    NetworkLayout,
    NullSpaceDesign,
    PotentialEval,
    PowerConfig,
    TrajectoryRecord,
    TrajectorySnapshot,
)
from jamsim.services.channel_field import ChannelField, eval_antenna_channels, eval_helper_channels
from jamsim.services.geometry import check_helper_index, neighbor_positions
from jamsim.services.jamming import build_design, leakage_phi_closed_form
from jamsim.services.secrecy import jamming_objective, secrecy_rate

logger = logging.getLogger(__name__)

FD_SHRINK_FACTOR = 10.0


@dataclass(frozen=True)
class SimulationState:
    """Everything one trajectory needs: positions, seeded field, powers and Alice's channels."""

    layout: NetworkLayout
    field: ChannelField
    power: PowerConfig
    h_A: complex
    g_A: complex
    seed: int = 0

    def __post_init__(self) -> None:
        if len(self.power.helper_budgets) != self.layout.helper_count:
            raise ValueError("one power budget is needed per helper")

    def with_layout(self, layout: NetworkLayout) -> SimulationState:
        return replace(self, layout=layout)


def _squared_gaps(layout: NetworkLayout, helper_index: int, center: np.ndarray, rho: float) -> np.ndarray:
    neighbors = neighbor_positions(layout, helper_index)
    return np.sum((np.asarray(center, dtype=float) - neighbors) ** 2, axis=1) - rho**2


def _collision_value(layout: NetworkLayout, helper_index: int, center: np.ndarray, rho: float) -> float:
    gaps = _squared_gaps(layout, helper_index, center, rho)
    if np.any(gaps <= 0.0):
        raise CollisionError(f"helper {helper_index} is within rho={rho} of another node")
    return float(np.sum(1.0 / gaps))


def collision_potential(layout: NetworkLayout, helper_index: int, rho: float) -> float:
    return _collision_value(layout, helper_index, layout.helpers[check_helper_index(layout, helper_index)].center, rho)


def collision_gradient(layout: NetworkLayout, helper_index: int, rho: float) -> np.ndarray:
    """Analytic -2 * sum_l (p_r - p_l) / (||p_r - p_l||^2 - rho^2)^2."""
    center = layout.helpers[check_helper_index(layout, helper_index)].center
    neighbors = neighbor_positions(layout, helper_index)
    deltas = center - neighbors
    gaps = np.sum(deltas**2, axis=1) - rho**2
    if np.any(gaps <= 0.0):
        raise CollisionError(f"helper {helper_index} is within rho={rho} of another node")
    return -2.0 * np.sum(deltas / gaps[:, np.newaxis] ** 2, axis=0)


def leakage_at(field: ChannelField, layout: NetworkLayout, helper_index: int, center: np.ndarray) -> float:
    """phi_r with helper ``helper_index`` rigidly translated to ``center``."""
    helper = layout.helpers[helper_index]
    antennas = np.asarray(center, dtype=float)[np.newaxis, :] + helper.antenna_offsets
    h_r, g_r = eval_antenna_channels(field, antennas)
    return leakage_phi_closed_form(h_r, g_r)


def position_is_admissible(layout: NetworkLayout, helper_index: int, center: np.ndarray) -> bool:
    if not layout.plane_bounds.contains(center):
        return False
    rho = layout.helpers[helper_index].disc_diameter_rho
    return bool(np.all(_squared_gaps(layout, helper_index, center, rho) > 0.0))


def evaluate_potential(
    field: ChannelField,
    layout: NetworkLayout,
    helper_index: int,
    center: np.ndarray,
    collision_weight: float = 1.0,
) -> tuple[float, float, float]:
    """(phi_r, phi_col, phi_total) for helper ``helper_index`` placed at ``center``."""
    rho = layout.helpers[helper_index].disc_diameter_rho
    phi_col = _collision_value(layout, helper_index, center, rho)
    phi_r = leakage_at(field, layout, helper_index, center)
    return phi_r, phi_col, collision_weight * phi_col - phi_r


def _leakage_gradient(
    field: ChannelField,
    layout: NetworkLayout,
    helper_index: int,
    fd_step: float,
) -> np.ndarray:
    center = layout.helpers[helper_index].center
    step = fd_step
    for _ in range(2):
        samples = [center + sign * step * axis for axis in np.eye(2) for sign in (1.0, -1.0)]
        if all(position_is_admissible(layout, helper_index, sample) for sample in samples):
            values = [leakage_at(field, layout, helper_index, sample) for sample in samples]
            return np.array([(values[0] - values[1]) / (2.0 * step), (values[2] - values[3]) / (2.0 * step)])
        step /= FD_SHRINK_FACTOR
    raise GradientStepError(f"finite-difference samples for helper {helper_index} collide or leave the plane")


def potential_gradient(
    field: ChannelField,
    layout: NetworkLayout,
    helper_index: int,
    fd_step: float,
    collision_weight: float = 1.0,
) -> PotentialEval:
    check_helper_index(layout, helper_index)
    if fd_step <= 0:
        raise ValueError("fd_step must be positive")
    helper = layout.helpers[helper_index]
    phi_r, phi_col, phi_total = evaluate_potential(field, layout, helper_index, helper.center, collision_weight)
    gradient = collision_weight * collision_gradient(layout, helper_index, helper.disc_diameter_rho)
    gradient = gradient - _leakage_gradient(field, layout, helper_index, fd_step)
    return PotentialEval(phi_r=phi_r, phi_col=phi_col, phi_total=phi_total, gradient=gradient)


def _line_search(
    state: SimulationState,
    helper_index: int,
    settings: ControllerSettings,
    step_index: int,
) -> ControlStep:
    layout = state.layout
    center = layout.helpers[helper_index].center
    current = potential_gradient(state.field, layout, helper_index, settings.fd_step, settings.collision_weight)
    velocity = -current.gradient
    displacement = settings.step_size * velocity
    length = float(np.linalg.norm(displacement))
    if length > settings.max_step_length:
        displacement *= settings.max_step_length / length
    ceiling = current.phi_total + settings.ascent_tolerance(current.phi_total)
    # Inset by fd_step so the next gradient samples stay on the plane.
    reachable = layout.plane_bounds.expanded(-settings.fd_step)

    for halvings in range(settings.max_backtracks + 1):
        candidate = reachable.clamp(center + displacement * 0.5**halvings)
        if position_is_admissible(layout, helper_index, candidate):
            _, _, total = evaluate_potential(state.field, layout, helper_index, candidate, settings.collision_weight)
            if total <= ceiling:
                if halvings:
                    record_event(BACKTRACKED, halvings)
                return ControlStep(
                    step_index=step_index,
                    helper_index=helper_index,
                    proposed_velocity=velocity,
                    step_size=settings.step_size * 0.5**halvings,
                    accepted_position=candidate,
                    backtrack_count=halvings,
                )

    record_event(HELPER_HELD)
    logger.debug("Helper held after exhausting backtracking", extra={"helperIndex": helper_index, "step": step_index})
    return ControlStep(
        step_index=step_index,
        helper_index=helper_index,
        proposed_velocity=velocity,
        step_size=0.0,
        accepted_position=center,
        backtrack_count=settings.max_backtracks,
        held=True,
    )


def _resolve_conflicts(layout: NetworkLayout, steps: list[ControlStep], step_index: int) -> list[ControlStep]:
    """Moves were checked against the snapshot; two helpers moving together can still meet."""
    clashing: set[int] = set()
    for a, b in combinations(range(len(steps)), 2):
        if steps[a].held or steps[b].held:
            continue
        rho = max(layout.helpers[a].disc_diameter_rho, layout.helpers[b].disc_diameter_rho)
        if np.linalg.norm(steps[a].accepted_position - steps[b].accepted_position) <= rho:
            clashing.update((a, b))
    for index in sorted(clashing):
        record_event(HELPER_HELD)
        logger.debug("Helper held to avoid a simultaneous collision", extra={"helperIndex": index, "step": step_index})
        steps[index] = replace(
            steps[index],
            accepted_position=layout.helpers[index].center,
            step_size=0.0,
            held=True,
        )
    return steps


def advance(
    state: SimulationState,
    settings: ControllerSettings,
    step_index: int = 1,
) -> tuple[SimulationState, tuple[ControlStep, ...]]:
    """One synchronous control step: every helper moves from the same snapshot."""
    steps = [_line_search(state, index, settings, step_index) for index in range(state.layout.helper_count)]
    steps = _resolve_conflicts(state.layout, steps, step_index)
    centers = np.stack([step.accepted_position for step in steps]) if steps else np.zeros((0, 2))
    return state.with_layout(state.layout.with_helper_centers(centers)), tuple(steps)


def state_designs(state: SimulationState) -> tuple[list[tuple[np.ndarray, np.ndarray]], list[NullSpaceDesign]]:
    """Per-helper (h_r, g_r) channels and their nulling designs at the current positions."""
    channels = [eval_helper_channels(state.field, state.layout, index) for index in range(state.layout.helper_count)]
    designs = [
        build_design(h_r, g_r, budget) for (h_r, g_r), budget in zip(channels, state.power.helper_budgets)
    ]
    return channels, designs


def snapshot(state: SimulationState, step: int) -> TrajectorySnapshot:
    _, designs = state_designs(state)
    layout = state.layout
    report = secrecy_rate(state.power, state.h_A, state.g_A, designs)
    return TrajectorySnapshot(
        step=step,
        positions=layout.helper_centers,
        phi=[design.leakage_phi for design in designs],
        phi_col=[
            collision_potential(layout, index, helper.disc_diameter_rho) for index, helper in enumerate(layout.helpers)
        ],
        objective=jamming_objective(designs),
        secrecy_rate=report.secrecy_rate,
        rate_supremum=report.rate_supremum,
    )


def run_trajectory(state: SimulationState, n_steps: int, settings: ControllerSettings) -> TrajectoryRecord:
    """Step 0 is the stationary placement; each later snapshot is recomputed from scratch."""
    if n_steps < 0:
        raise ValueError("n_steps must be non-negative")
    snapshots = [snapshot(state, 0)]
    history: list[tuple[ControlStep, ...]] = []
    for step in range(1, n_steps + 1):
        state, steps = advance(state, settings, step)
        history.append(steps)
        snapshots.append(snapshot(state, step))
    logger.debug(
        "Trajectory finished",
        extra={"steps": n_steps, "initialRate": snapshots[0].secrecy_rate, "finalRate": snapshots[-1].secrecy_rate},
    )
    return TrajectoryRecord(snapshots=tuple(snapshots), steps=tuple(history))
