import math

import numpy as np

from jamsim.models import HelperGeometry, NetworkLayout

DEFAULT_RHO_MARGIN = 0.05


def default_antenna_radius(antenna_count: int, wavelength: float) -> float:
    """Smallest circle radius whose adjacent antennas sit at least lambda/2 apart."""
    if antenna_count < 2:
        raise ValueError("helper_needs_two_antennas")
    chord_radius = (wavelength / 2.0) / (2.0 * math.sin(math.pi / antenna_count))
    return max(wavelength / 4.0, chord_radius)


def default_antenna_offsets(antenna_count: int, wavelength: float) -> np.ndarray:
    radius = default_antenna_radius(antenna_count, wavelength)
    angles = 2.0 * math.pi * np.arange(antenna_count) / antenna_count
    offsets = radius * np.column_stack([np.cos(angles), np.sin(angles)])
    # cos/sin round-off would otherwise leave 1e-17 components on the axis-aligned antennas.
    offsets[np.abs(offsets) < 1e-15 * radius] = 0.0
    return offsets


def default_disc_diameter(antenna_count: int, wavelength: float, margin: float = DEFAULT_RHO_MARGIN) -> float:
    return 2.0 * default_antenna_radius(antenna_count, wavelength) + margin


def build_helper(
    center,
    antenna_count: int,
    wavelength: float,
    rho: float | None = None,
) -> HelperGeometry:
    diameter = rho if rho is not None else default_disc_diameter(antenna_count, wavelength)
    helper = HelperGeometry(
        center=np.asarray(center, dtype=float),
        disc_diameter_rho=diameter,
        antenna_offsets=default_antenna_offsets(antenna_count, wavelength),
    )
    check_antenna_spacing(helper, wavelength)
    return helper


def antenna_positions(helper: HelperGeometry) -> np.ndarray:
    return helper.center[np.newaxis, :] + helper.antenna_offsets


def check_antenna_spacing(helper: HelperGeometry, wavelength: float) -> None:
    offsets = helper.antenna_offsets
    deltas = offsets[:, np.newaxis, :] - offsets[np.newaxis, :, :]
    distances = np.linalg.norm(deltas, axis=-1)
    distances[np.diag_indices_from(distances)] = np.inf
    if distances.min() < (wavelength / 2.0) * (1.0 - 1e-12):
        raise ValueError("antenna_spacing_below_half_wavelength")


def neighbor_positions(layout: NetworkLayout, helper_index: int) -> np.ndarray:
    """Positions of S = {all helpers, A, B, E} minus helper ``helper_index``."""
    check_helper_index(layout, helper_index)
    centers = layout.helper_centers
    others = np.delete(centers, helper_index, axis=0)
    return np.vstack([others, layout.fixed_nodes])


def min_separation(layout: NetworkLayout, helper_index: int) -> float:
    center = layout.helpers[check_helper_index(layout, helper_index)].center
    distances = np.linalg.norm(neighbor_positions(layout, helper_index) - center, axis=1)
    return float(distances.min())


def layout_is_feasible(layout: NetworkLayout) -> bool:
    points = np.vstack([layout.fixed_nodes, layout.helper_centers])
    if not all(layout.plane_bounds.contains(point) for point in points):
        return False
    for index, helper in enumerate(layout.helpers):
        if min_separation(layout, index) <= helper.disc_diameter_rho:
            return False
    return True


def check_helper_index(layout: NetworkLayout, helper_index: int) -> int:
    if not 0 <= helper_index < layout.helper_count:
        raise IndexError(f"helper index {helper_index} out of range for {layout.helper_count} helpers")
    return helper_index
