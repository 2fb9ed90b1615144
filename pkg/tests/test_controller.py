"""
Controller tests.

Covers:
- Collision potential values, errors and its analytic gradient
- Finite-difference leakage gradient: convergence order and sample handling
- Decentralization: a helper's gradient only reads its own channels
- Synchronous stepping: ascent tolerance, safety, holding, conflicts
- Trajectory records: length, determinism, rates recomputed from scratch
"""
import numpy as np
import pytest

from jamsim.core.errors import CollisionError, GradientStepError
from jamsim.core.telemetry import HELPER_HELD, get_event_counts
from jamsim.models import ControllerSettings, NetworkLayout, PlaneBounds, PotentialEval
from jamsim.services import controller
from jamsim.services.channel_field import ChannelField, FadingMap
from jamsim.services.controller import (
    advance,
    collision_gradient,
    collision_potential,
    evaluate_potential,
    potential_gradient,
    run_trajectory,
    state_designs,
)
from jamsim.services.geometry import build_helper, layout_is_feasible, min_separation
from jamsim.services.harness import build_scenario, controller_settings
from jamsim.services.secrecy import secrecy_rate

RHO = 0.25


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------

class RecordingFadingMap(FadingMap):
    def __init__(self, inner: FadingMap) -> None:
        self.inner = inner
        self.anchor_pos = inner.anchor_pos
        self.queries: list[np.ndarray] = []

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        self.queries.append(points.copy())
        return self.inner.evaluate(points)


def _plane_layout(*centers, bounds: PlaneBounds | None = None, fixed=((1.5, 0.1), (1.5, 4.9), (1.5, 4.1))):
    return NetworkLayout(
        alice_pos=fixed[0],
        bob_pos=fixed[1],
        eve_pos=fixed[2],
        helpers=tuple(build_helper(center, 2, 0.4, RHO) for center in centers),
        plane_bounds=bounds or PlaneBounds(0.0, 0.0, 3.0, 5.0),
    )


def _with_centers(state, *centers):
    return state.with_layout(state.layout.with_helper_centers(np.array(centers, dtype=float)))


# ---------------------------------------------------------------------------
# Collision potential
# ---------------------------------------------------------------------------

def test_collision_potential_single_neighbor_at_unit_gap():
    far = PlaneBounds(0.0, 0.0, 2000.0, 2000.0)
    offset = np.sqrt(1.0 + RHO**2)
    layout = _plane_layout(
        (1000.0, 1000.0),
        (1000.0 + offset, 1000.0),
        bounds=far,
        fixed=((0.0, 0.0), (2000.0, 2000.0), (0.0, 2000.0)),
    )

    # Fixed nodes sit more than 1 km away and contribute below 1e-6.
    assert collision_potential(layout, 0, RHO) == pytest.approx(1.0, abs=1e-5)


def test_collision_potential_on_the_plane_layout():
    layout = _plane_layout((1.5, 2.5))
    expected = 2.0 / (2.4**2 - RHO**2) + 1.0 / (1.6**2 - RHO**2)

    assert collision_potential(layout, 0, RHO) == pytest.approx(expected, rel=1e-12)


def test_collision_potential_rejects_overlap():
    layout = _plane_layout((1.4, 2.5), (1.6, 2.5))

    with pytest.raises(CollisionError):
        collision_potential(layout, 0, RHO)
    with pytest.raises(CollisionError):
        collision_gradient(layout, 1, RHO)


def test_analytic_collision_gradient_matches_finite_differences():
    layout = _plane_layout((1.2, 2.4), (1.7, 2.7), (2.4, 1.5))
    step = 1e-5
    analytic = collision_gradient(layout, 0, RHO)
    numeric = np.zeros(2)
    for axis in range(2):
        shift = np.zeros(2)
        shift[axis] = step
        centers = layout.helper_centers
        plus, minus = centers.copy(), centers.copy()
        plus[0] += shift
        minus[0] -= shift
        numeric[axis] = (
            collision_potential(layout.with_helper_centers(plus), 0, RHO)
            - collision_potential(layout.with_helper_centers(minus), 0, RHO)
        ) / (2 * step)

    assert np.allclose(analytic, numeric, rtol=1e-6, atol=0.0)


# ---------------------------------------------------------------------------
# Potential gradient
# ---------------------------------------------------------------------------

def test_close_helpers_are_pushed_apart(scenario_config):
    state = _with_centers(build_scenario(scenario_config, seed=3, helper_count=2), (1.3625, 2.5), (1.6375, 2.5))
    evaluation = potential_gradient(state.field, state.layout, 0, fd_step=4e-4)
    step_direction = -evaluation.gradient
    away = state.layout.helpers[0].center - state.layout.helpers[1].center

    assert float(np.dot(step_direction, away)) > 0


def test_potential_parts_add_up(single_helper_state):
    layout = single_helper_state.layout
    evaluation = potential_gradient(single_helper_state.field, layout, 0, fd_step=4e-4, collision_weight=2.0)

    assert evaluation.phi_r >= 0
    assert evaluation.phi_col > 0
    assert evaluation.phi_total == pytest.approx(2.0 * evaluation.phi_col - evaluation.phi_r)
    assert np.all(np.isfinite(evaluation.gradient))


def test_leakage_gradient_is_second_order_accurate(single_helper_state):
    state = single_helper_state
    reference = potential_gradient(state.field, state.layout, 0, fd_step=1e-6, collision_weight=0.0).gradient
    coarse = potential_gradient(state.field, state.layout, 0, fd_step=0.02, collision_weight=0.0).gradient
    fine = potential_gradient(state.field, state.layout, 0, fd_step=0.01, collision_weight=0.0).gradient

    coarse_error = np.linalg.norm(coarse - reference)
    fine_error = np.linalg.norm(fine - reference)

    assert fine_error <= coarse_error / 2
    assert coarse_error / fine_error > 3.0


def test_gradient_near_the_edge_shrinks_its_samples(scenario_config):
    state = _with_centers(build_scenario(scenario_config, seed=0, helper_count=1), (2e-4, 2.5))

    evaluation = potential_gradient(state.field, state.layout, 0, fd_step=4e-4)

    assert np.all(np.isfinite(evaluation.gradient))


def test_gradient_on_the_edge_fails(scenario_config):
    state = _with_centers(build_scenario(scenario_config, seed=0, helper_count=1), (0.0, 2.5))

    with pytest.raises(GradientStepError):
        potential_gradient(state.field, state.layout, 0, fd_step=4e-4)


def test_gradient_reads_only_the_helpers_own_channels(scenario_config):
    state = build_scenario(scenario_config, seed=5, helper_count=3)
    bob = RecordingFadingMap(state.field.bob_map)
    eve = RecordingFadingMap(state.field.eve_map)
    field = ChannelField(params=state.field.params, bob_map=bob, eve_map=eve)
    fd_step = 4e-4

    for index in range(3):
        bob.queries.clear()
        eve.queries.clear()
        potential_gradient(field, state.layout, index, fd_step=fd_step)
        center = state.layout.helpers[index].center
        queried = np.vstack(bob.queries + eve.queries)
        reach = state.layout.helpers[index].disc_diameter_rho / 2 + fd_step + 1e-12

        assert len(queried) > 0
        assert np.all(np.linalg.norm(queried - center, axis=1) <= reach)


# ---------------------------------------------------------------------------
# Stepping
# ---------------------------------------------------------------------------

def test_zero_gradient_leaves_positions_unchanged(monkeypatch, scenario_config):
    state = build_scenario(scenario_config, seed=2, helper_count=3)

    def flat(field, layout, helper_index, fd_step, collision_weight=1.0):
        return PotentialEval(phi_r=0.0, phi_col=1.0, phi_total=1.0, gradient=np.zeros(2))

    monkeypatch.setattr(controller, "evaluate_potential", lambda *args, **kwargs: (0.0, 1.0, 1.0))
    monkeypatch.setattr(controller, "potential_gradient", flat)
    moved, steps = advance(state, controller_settings(scenario_config))

    assert np.array_equal(moved.layout.helper_centers, state.layout.helper_centers)
    assert all(step.backtrack_count == 0 and not step.held for step in steps)


def test_trapped_helper_holds_and_is_counted(monkeypatch, single_helper_state):
    def unreachable(field, layout, helper_index, fd_step, collision_weight=1.0):
        return PotentialEval(phi_r=0.0, phi_col=0.0, phi_total=-1e9, gradient=np.array([1.0, 0.0]))

    monkeypatch.setattr(controller, "potential_gradient", unreachable)
    settings = ControllerSettings(max_backtracks=5)
    moved, steps = advance(single_helper_state, settings, step_index=7)

    assert steps[0].held
    assert steps[0].backtrack_count == 5
    assert steps[0].step_index == 7
    assert np.array_equal(moved.layout.helper_centers, single_helper_state.layout.helper_centers)
    assert get_event_counts()[HELPER_HELD] == 1


def test_simultaneous_moves_into_each_other_are_held(monkeypatch, scenario_config):
    state = _with_centers(build_scenario(scenario_config, seed=4, helper_count=2), (1.3, 2.5), (1.7, 2.5))

    def converge(field, layout, helper_index, fd_step, collision_weight=1.0):
        direction = 1.0 if helper_index == 0 else -1.0
        return PotentialEval(phi_r=0.0, phi_col=1.0, phi_total=1e9, gradient=np.array([-100.0 * direction, 0.0]))

    monkeypatch.setattr(controller, "potential_gradient", converge)
    moved, steps = advance(state, ControllerSettings(max_step_length=0.1))

    assert all(step.held for step in steps)
    assert np.array_equal(moved.layout.helper_centers, state.layout.helper_centers)
    assert get_event_counts()[HELPER_HELD] == 2


def test_first_step_is_capped_at_quarter_wavelength(scenario_config):
    state = _with_centers(build_scenario(scenario_config, seed=3, helper_count=2), (1.3625, 2.5), (1.6375, 2.5))
    settings = controller_settings(scenario_config)
    moved, _ = advance(state, settings)
    shifts = np.linalg.norm(moved.layout.helper_centers - state.layout.helper_centers, axis=1)

    assert settings.max_step_length == pytest.approx(0.1)
    assert np.all(shifts <= 0.1 + 1e-12)


def test_close_helpers_separate_within_ten_steps(scenario_config):
    state = _with_centers(build_scenario(scenario_config, seed=3, helper_count=2), (1.3625, 2.5), (1.6375, 2.5))
    initial = min_separation(state.layout, 0)
    settings = controller_settings(scenario_config)
    for step in range(1, 11):
        state, _ = advance(state, settings, step)

    assert initial == pytest.approx(1.1 * RHO)
    assert min_separation(state.layout, 0) > initial


def test_accepted_steps_respect_ascent_tolerance_and_safety(scenario_config):
    settings = controller_settings(scenario_config)
    for seed in range(20):
        state = build_scenario(scenario_config, seed=seed, helper_count=1)
        for step in range(1, 151):
            before = state.layout
            state, steps = advance(state, settings, step)
            for control in steps:
                if control.held:
                    continue
                index = control.helper_index
                old = evaluate_potential(state.field, before, index, before.helpers[index].center, settings.collision_weight)
                new = evaluate_potential(state.field, before, index, control.accepted_position, settings.collision_weight)
                assert new[2] <= old[2] + settings.ascent_tolerance(old[2])
            assert layout_is_feasible(state.layout)


def test_leakage_ascent_never_lowers_a_single_helpers_rate(scenario_config):
    config = scenario_config.with_overrides(collision_weight=0.0)
    settings = ControllerSettings(
        step_size=config.step_size,
        fd_step=config.resolved_fd_step,
        collision_weight=0.0,
        max_step_length=config.resolved_max_step_length,
        ascent_rtol=0.0,
        ascent_atol=0.0,
    )
    initial, final = [], []
    for seed in range(8):
        record = run_trajectory(build_scenario(config, seed=seed, helper_count=1), 10, settings)
        assert np.all(np.diff(record.rates) >= -1e-12)
        initial.append(record.initial.secrecy_rate)
        final.append(record.final.secrecy_rate)

    assert np.median(final) > np.median(initial)


# ---------------------------------------------------------------------------
# Trajectories
# ---------------------------------------------------------------------------

def test_zero_steps_record_only_the_initial_state(single_helper_state, scenario_config):
    record = run_trajectory(single_helper_state, 0, controller_settings(scenario_config))

    assert len(record.snapshots) == 1
    assert record.initial.step == 0
    assert record.steps == ()


def test_record_length_is_steps_plus_one(single_helper_state, scenario_config):
    record = run_trajectory(single_helper_state, 6, controller_settings(scenario_config))

    assert [snap.step for snap in record.snapshots] == list(range(7))
    assert len(record.steps) == 6


def test_trajectory_is_deterministic(scenario_config):
    settings = controller_settings(scenario_config)
    first = run_trajectory(build_scenario(scenario_config, seed=11, helper_count=2), 8, settings)
    second = run_trajectory(build_scenario(scenario_config, seed=11, helper_count=2), 8, settings)

    assert np.array_equal(first.rates, second.rates)
    for a, b in zip(first.snapshots, second.snapshots):
        assert np.array_equal(a.positions, b.positions)
        assert np.array_equal(a.phi, b.phi)


def test_reported_rate_matches_a_fresh_evaluation(scenario_config):
    settings = controller_settings(scenario_config)
    state = build_scenario(scenario_config, seed=6, helper_count=2)
    record = run_trajectory(state, 5, settings)
    for snap in record.snapshots:
        fresh_state = state.with_layout(state.layout.with_helper_centers(snap.positions))
        _, designs = state_designs(fresh_state)
        fresh = secrecy_rate(fresh_state.power, fresh_state.h_A, fresh_state.g_A, designs)

        assert snap.secrecy_rate == pytest.approx(fresh.secrecy_rate, abs=1e-12)
        assert snap.rate_supremum == pytest.approx(fresh.rate_supremum, abs=1e-12)
