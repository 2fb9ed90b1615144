"""
Experiment harness tests.

Covers:
- Helper placement and SNR normalization
- Stationary baseline behaviour over many seeds
- Sweep aggregation, ordering across worker counts and failure capture
- Power sweep monotonicity
- Multi-start screening and the single-helper rate target
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError

from jamsim.core.errors import PlacementError
from jamsim.core.telemetry import CELL_FAILED, PLACEMENT_RETRY, get_event_counts
from jamsim.services import harness
from jamsim.services.controller import state_designs
from jamsim.services.geometry import layout_is_feasible
from jamsim.services.harness import (
    aggregate_rates,
    build_scenario,
    place_helpers,
    rate_supremum,
    run_cell,
    run_power_sweep,
    run_sweep,
    screen_starts,
)
from jamsim.services.secrecy import secrecy_rate


# ---------------------------------------------------------------------------
# Placement and normalization
# ---------------------------------------------------------------------------

def test_single_helper_sits_mid_plane(scenario_config):
    layout = place_helpers(scenario_config, 1, seed=0)
    x, y = layout.helpers[0].center

    assert x == pytest.approx(1.5)
    assert abs(y - 2.5) <= scenario_config.init_jitter_gamma


def test_helpers_are_spread_evenly_across_the_width(scenario_config):
    layout = place_helpers(scenario_config, 4, seed=9)

    assert np.allclose(layout.helper_centers[:, 0], [0.375, 1.125, 1.875, 2.625])
    assert np.all(np.abs(layout.helper_centers[:, 1] - 2.5) <= 0.1)


def test_placement_is_seeded(scenario_config):
    first = place_helpers(scenario_config, 3, seed=4).helper_centers
    second = place_helpers(scenario_config, 3, seed=4).helper_centers
    other = place_helpers(scenario_config, 3, seed=5).helper_centers

    assert np.array_equal(first, second)
    assert not np.array_equal(first, other)


def test_crowded_placement_gives_up(scenario_config):
    # Twelve helpers 0.25 m apart with 0.1 m of jitter cannot clear rho = 0.4.
    crowded = scenario_config.with_overrides(rho=0.4)

    with pytest.raises(PlacementError):
        place_helpers(crowded, 12, seed=0)
    assert get_event_counts()[PLACEMENT_RETRY] == harness.MAX_PLACEMENT_DRAWS


def test_bob_snr_is_pinned_for_every_seed(scenario_config):
    for seed in range(10):
        state = build_scenario(scenario_config, seed=seed, helper_count=2)

        assert state.power.source_power_Ps * abs(state.h_A) ** 2 / state.power.noise_floor_N0 == pytest.approx(100.0)
        assert state.power.helper_budgets == pytest.approx((10 ** 1.7, 10 ** 1.7))


def test_rate_supremum_is_the_same_for_every_seed(scenario_config):
    expected = math.log2(101.0)
    assert rate_supremum(scenario_config) == pytest.approx(expected)
    for seed in range(5):
        state = build_scenario(scenario_config, seed=seed)
        _, designs = state_designs(state)

        assert secrecy_rate(state.power, state.h_A, state.g_A, designs).rate_supremum == pytest.approx(expected)


def test_stationary_rate_grows_with_helper_count(scenario_config):
    medians = {}
    for count in (1, 2, 4, 6):
        rates = []
        for seed in range(100):
            state = build_scenario(scenario_config, seed=seed, helper_count=count)
            _, designs = state_designs(state)
            rates.append(secrecy_rate(state.power, state.h_A, state.g_A, designs).secrecy_rate)
        medians[count] = float(np.median(rates))

    assert medians[1] <= medians[2] <= medians[4] <= medians[6]
    assert medians[6] - medians[1] >= 1.0


# ---------------------------------------------------------------------------
# Aggregation
# ---------------------------------------------------------------------------

def test_aggregate_rates_uses_median_and_linear_quartiles():
    rows = aggregate_rates({0: [1.0, 2.0, 3.0, 4.0], 1: [-1.0, 0.5, 2.0]}, helper_count=2, r_sup=6.0)

    assert [row.step for row in rows] == [0, 1]
    assert rows[0].median_rate == pytest.approx(2.5)
    assert rows[0].q25 == pytest.approx(1.75)
    assert rows[0].q75 == pytest.approx(3.25)
    # Raw signed rates are kept; clamping is for plotting only.
    assert rows[1].q25 == pytest.approx(-0.25)
    assert all(row.helper_count == 2 and row.r_sup == 6.0 for row in rows)


def test_sweep_collects_rows_for_every_cell(short_config):
    result = run_sweep(short_config)

    assert result.succeeded
    assert result.helper_counts == (1, 2)
    # (1 + 2 helpers) * 3 seeds * 5 recorded states.
    assert len(result.trajectory_rows) == 3 * 3 * 5
    assert len(result.aggregate_rows) == 2 * 5
    assert result.rate_supremum == pytest.approx(math.log2(101.0))


def test_aggregates_can_be_recomputed_from_trajectory_rows(short_config):
    result = run_sweep(short_config)
    for row in result.aggregate_rows:
        rates = {
            (traj.seed, traj.secrecy_rate)
            for traj in result.trajectory_rows
            if traj.helper_count == row.helper_count and traj.step == row.step
        }
        values = [rate for _, rate in sorted(rates)]

        assert len(values) == len(short_config.seeds)
        assert row.median_rate == pytest.approx(float(np.median(values)), abs=1e-12)
        assert row.q25 == pytest.approx(float(np.percentile(values, 25)), abs=1e-12)


def test_step_zero_is_the_stationary_baseline(short_config):
    result = run_sweep(short_config, helper_counts=[2])
    for seed in short_config.seeds:
        state = build_scenario(short_config, seed=seed, helper_count=2)
        _, designs = state_designs(state)
        expected = secrecy_rate(state.power, state.h_A, state.g_A, designs).secrecy_rate
        recorded = [
            row.secrecy_rate for row in result.trajectory_rows if row.seed == seed and row.step == 0
        ]

        assert recorded == pytest.approx([expected, expected], abs=1e-12)


def test_worker_count_does_not_change_results(short_config):
    serial = run_sweep(short_config, workers=1)
    threaded = run_sweep(short_config, workers=3)

    assert serial.trajectory_rows == threaded.trajectory_rows
    assert serial.aggregate_rows == threaded.aggregate_rows


def test_failed_cell_is_recorded_and_the_rest_continue(monkeypatch, short_config):
    real_build = harness.build_scenario

    def flaky(config, seed, helper_count=None, jnnr_db=None):
        if seed == 1 and helper_count == 2:
            raise PlacementError("no room")
        return real_build(config, seed, helper_count, jnnr_db)

    monkeypatch.setattr(harness, "build_scenario", flaky)
    result = run_sweep(short_config)

    assert not result.succeeded
    assert len(result.failures) == 1
    failure = result.failures[0]
    assert (failure.helper_count, failure.seed, failure.code) == (2, 1, "placement_failed")
    assert result.telemetry[CELL_FAILED] == 1
    assert {row.seed for row in result.trajectory_rows if row.helper_count == 2} == {0, 2}


def test_sweep_rejects_empty_helper_counts(short_config):
    with pytest.raises(ValueError):
        run_sweep(short_config, helper_counts=[])


# ---------------------------------------------------------------------------
# Power sweep
# ---------------------------------------------------------------------------

def test_power_sweep_stationary_rate_rises_with_jnnr(scenario_config):
    config = scenario_config.with_overrides(steps=0, seeds=list(range(15)))
    result = run_power_sweep(config, helper_count=2, jnnr_values_db=[5.0, 11.0, 17.0, 23.0, 11.0])
    stationary = [row.median_stationary_rate for row in result.rows]

    assert result.succeeded
    assert [row.jnnr_db for row in result.rows] == [5.0, 11.0, 17.0, 23.0]
    assert all(later > earlier for earlier, later in zip(stationary, stationary[1:]))
    # With zero steps the mobile column is the stationary one.
    assert [row.median_mobile_rate for row in result.rows] == stationary


def test_power_sweep_needs_levels(short_config):
    with pytest.raises(ValueError):
        run_power_sweep(short_config, helper_count=1, jnnr_values_db=[])


# ---------------------------------------------------------------------------
# Multi-start
# ---------------------------------------------------------------------------

def _stationary_rate(config, seed, helper_count):
    state = build_scenario(config, seed=seed, helper_count=helper_count)
    _, designs = state_designs(state)
    return secrecy_rate(state.power, state.h_A, state.g_A, designs).secrecy_rate


def test_multi_start_is_off_by_default(scenario_config, single_helper_state):
    assert scenario_config.multi_start == 0
    assert screen_starts(scenario_config, single_helper_state) == []


def test_multi_start_cannot_exceed_its_candidates(scenario_config):
    with pytest.raises(ValidationError):
        scenario_config.with_overrides(multi_start=5, multi_start_candidates=4)


def test_screened_starts_are_feasible_ranked_and_seeded(scenario_config, single_helper_state):
    config = scenario_config.with_overrides(multi_start=3, multi_start_candidates=40)
    starts = screen_starts(config, single_helper_state)
    again = screen_starts(config, single_helper_state)
    state = single_helper_state
    rates = []
    for layout in starts:
        _, designs = state_designs(state.with_layout(layout))
        rates.append(secrecy_rate(state.power, state.h_A, state.g_A, designs).secrecy_rate)

    assert len(starts) == 3
    assert all(layout_is_feasible(layout) for layout in starts)
    assert rates == sorted(rates, reverse=True)
    assert [layout.helper_centers.tolist() for layout in starts] == [layout.helper_centers.tolist() for layout in again]


def test_multi_start_never_ends_below_the_nominal_run(scenario_config):
    config = scenario_config.with_overrides(steps=10, seeds=[0, 1, 2], multi_start=2, multi_start_candidates=32)
    plain = run_sweep(config.with_overrides(multi_start=0), helper_counts=[1])
    multi = run_sweep(config, helper_counts=[1])

    def finals(result):
        return {row.seed: row.secrecy_rate for row in result.trajectory_rows if row.step == 10}

    assert multi.succeeded
    for seed, rate in finals(plain).items():
        assert finals(multi)[seed] >= rate


def test_cell_keeps_the_nominal_stationary_rate_under_multi_start(scenario_config):
    config = scenario_config.with_overrides(steps=3, multi_start=2, multi_start_candidates=16)
    cell = run_cell(config, helper_count=1, seed=4)

    assert cell.stationary_rate == pytest.approx(_stationary_rate(config, 4, 1), abs=1e-12)
    assert len(cell.record.snapshots) == 4


def test_single_helper_approaches_the_supremum_with_multi_start(scenario_config):
    # From the nominal placement alone the helper settles on a fading peak
    # about 15 cm from where it started; the screened starts reach Eve.
    config = scenario_config.with_overrides(steps=150, seeds=list(range(20)), multi_start=4)
    result = run_sweep(config, helper_counts=[1])
    finals = [row.secrecy_rate for row in result.trajectory_rows if row.step == 150]
    stationary = [_stationary_rate(config, seed, 1) for seed in config.seeds]

    assert result.succeeded
    assert len(finals) == 20
    assert float(np.median(finals)) >= 0.8 * result.rate_supremum
    assert float(np.median(finals)) >= float(np.median(stationary)) + 1.0
