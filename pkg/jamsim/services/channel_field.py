"""
Spatially correlated flat-fading channel map.

The multipath coefficient alpha for a fixed receiving terminal (the anchor) is
a smooth complex Gaussian field over transmitter positions. It is built from a
lattice of i.i.d. complex Gaussian knots with spacing L/2 (L is the
correlation length, lambda/2 by default), blended by a separable Gaussian
kernel and renormalized pointwise so that E|alpha|^2 = 1/2 everywhere. The
field correlation between two points at distance d is close to exp(-d^2/L^2).

Channel gain between a transmitter at p_i and the anchor at p_j:

    c = alpha(p_i) * d^(-mu/2) * exp(1j * 2*pi*d / lambda)
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from jamsim.core.errors import CoincidentPositionError, FieldDomainError
from jamsim.models import ChannelParams, NetworkLayout, PlaneBounds, frozen_array
from jamsim.services.geometry import antenna_positions

FADING_VARIANCE = 0.5
ANCHOR_BOB = 1
ANCHOR_EVE = 2
# The knot lattice extends this many kernel scales past the plane; queries may go half as far.
_KNOT_MARGIN_SCALES = 6.0
_COINCIDENT_DISTANCE = 1e-12


class FadingMap:
    """Deterministic map from transmitter position to the fading coefficient alpha."""

    anchor_pos: np.ndarray

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        raise NotImplementedError


@dataclass(frozen=True)
class UniformFadingMap(FadingMap):
    """alpha pinned to a constant: path loss and phase only."""

    anchor_pos: np.ndarray
    value: complex = 1.0 + 0.0j

    def __post_init__(self) -> None:
        object.__setattr__(self, "anchor_pos", frozen_array(self.anchor_pos))

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return np.full(points.shape[0], complex(self.value), dtype=complex)


@dataclass(frozen=True)
class GaussianKernelFadingMap(FadingMap):
    anchor_pos: np.ndarray
    knots: np.ndarray
    origin: np.ndarray
    spacing: float
    kernel_scale: float
    extent: PlaneBounds

    def __post_init__(self) -> None:
        object.__setattr__(self, "anchor_pos", frozen_array(self.anchor_pos))
        object.__setattr__(self, "knots", frozen_array(self.knots, dtype=complex))
        object.__setattr__(self, "origin", frozen_array(self.origin))

    def _axis_weights(self, coords: np.ndarray, axis: int) -> np.ndarray:
        count = self.knots.shape[axis]
        knot_coords = self.origin[axis] + self.spacing * np.arange(count)
        deltas = coords[:, np.newaxis] - knot_coords[np.newaxis, :]
        return np.exp(-(deltas**2) / self.kernel_scale**2)

    def evaluate(self, points: np.ndarray) -> np.ndarray:
        points = np.atleast_2d(np.asarray(points, dtype=float))
        for point in points:
            if not self.extent.contains(point):
                raise FieldDomainError(f"point ({point[0]:.4f}, {point[1]:.4f}) is outside the fading map")
        wx = self._axis_weights(points[:, 0], axis=0)
        wy = self._axis_weights(points[:, 1], axis=1)
        raw = np.einsum("mi,ij,mj->m", wx, self.knots, wy)
        energy = np.sum(wx**2, axis=1) * np.sum(wy**2, axis=1)
        return raw * np.sqrt(FADING_VARIANCE / energy)


@dataclass(frozen=True)
class ChannelField:
    """Bob- and Eve-anchored fading maps for one seeded scenario."""

    params: ChannelParams
    bob_map: FadingMap
    eve_map: FadingMap


def _anchor_rng(seed: int, anchor_id: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, anchor_id]))


def build_fading_map(
    params: ChannelParams,
    anchor_pos: np.ndarray,
    anchor_id: int,
    bounds: PlaneBounds,
) -> GaussianKernelFadingMap:
    """Seed a fading map covering ``bounds`` for the terminal at ``anchor_pos``."""
    spacing = params.knot_spacing
    margin = _KNOT_MARGIN_SCALES * params.kernel_scale
    origin = np.array([bounds.x_min - margin, bounds.y_min - margin])
    nx = int(math.ceil((bounds.width + 2 * margin) / spacing)) + 1
    ny = int(math.ceil((bounds.height + 2 * margin) / spacing)) + 1
    rng = _anchor_rng(params.seed, anchor_id)
    knots = (rng.standard_normal((nx, ny)) + 1j * rng.standard_normal((nx, ny))) / math.sqrt(2.0)
    return GaussianKernelFadingMap(
        anchor_pos=anchor_pos,
        knots=knots,
        origin=origin,
        spacing=spacing,
        kernel_scale=params.kernel_scale,
        extent=bounds.expanded(margin / 2.0),
    )


def build_channel_field(
    params: ChannelParams,
    layout: NetworkLayout,
    fading_model: str = "correlated",
) -> ChannelField:
    if fading_model == "none":
        return ChannelField(
            params=params,
            bob_map=UniformFadingMap(layout.bob_pos, complex(math.sqrt(FADING_VARIANCE))),
            eve_map=UniformFadingMap(layout.eve_pos, complex(math.sqrt(FADING_VARIANCE))),
        )
    if fading_model != "correlated":
        raise ValueError(f"unknown fading model {fading_model!r}")
    bounds = layout.plane_bounds
    return ChannelField(
        params=params,
        bob_map=build_fading_map(params, layout.bob_pos, ANCHOR_BOB, bounds),
        eve_map=build_fading_map(params, layout.eve_pos, ANCHOR_EVE, bounds),
    )


def _pathloss_phase(params: ChannelParams, points: np.ndarray, anchor: np.ndarray) -> np.ndarray:
    distances = np.linalg.norm(points - np.asarray(anchor, dtype=float)[np.newaxis, :], axis=1)
    if np.any(distances < _COINCIDENT_DISTANCE):
        raise CoincidentPositionError("transmitter coincides with the receiving terminal")
    return distances ** (-params.pathloss_mu / 2.0) * np.exp(1j * 2.0 * math.pi * distances / params.wavelength_lambda)


def eval_gains(params: ChannelParams, fading: FadingMap, points: np.ndarray, anchor: np.ndarray) -> np.ndarray:
    """Vectorized :func:`eval_gain` over the rows of ``points``."""
    points = np.atleast_2d(np.asarray(points, dtype=float))
    scale = _pathloss_phase(params, points, anchor)
    return fading.evaluate(points) * scale


def eval_gain(params: ChannelParams, fading: FadingMap, pos_i, pos_j) -> complex:
    return complex(eval_gains(params, fading, np.asarray(pos_i, dtype=float)[np.newaxis, :], pos_j)[0])


def eval_antenna_channels(field: ChannelField, antennas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Channels from each antenna position to Bob (h) and to Eve (g)."""
    h = eval_gains(field.params, field.bob_map, antennas, field.bob_map.anchor_pos)
    g = eval_gains(field.params, field.eve_map, antennas, field.eve_map.anchor_pos)
    return h, g


def eval_helper_channels(
    field: ChannelField,
    layout: NetworkLayout,
    helper_index: int,
) -> tuple[np.ndarray, np.ndarray]:
    if not 0 <= helper_index < layout.helper_count:
        raise IndexError(f"helper index {helper_index} out of range for {layout.helper_count} helpers")
    return eval_antenna_channels(field, antenna_positions(layout.helpers[helper_index]))


def eval_source_channels(field: ChannelField, alice_pos: np.ndarray) -> tuple[complex, complex]:
    """Alice's scalar channels (h_A to Bob, g_A to Eve) from the same anchored maps."""
    h, g = eval_antenna_channels(field, np.asarray(alice_pos, dtype=float)[np.newaxis, :])
    return complex(h[0]), complex(g[0])


def correlation_check(
    params: ChannelParams,
    point_a,
    point_b,
    n_seeds: int,
    base_seed: int = 0,
) -> complex:
    """Empirical E{alpha(a) conj(alpha(b))} / E{|alpha|^2} across independently seeded maps."""
    if n_seeds < 1000:
        raise ValueError("correlation_check needs at least 1000 seeds")
    a = np.asarray(point_a, dtype=float)
    b = np.asarray(point_b, dtype=float)
    pad = params.correlation_length
    bounds = PlaneBounds(
        min(a[0], b[0]) - pad,
        min(a[1], b[1]) - pad,
        max(a[0], b[0]) + pad,
        max(a[1], b[1]) + pad,
    )
    anchor = np.array([bounds.x_max + 1.0, bounds.y_max + 1.0])
    values = np.empty((n_seeds, 2), dtype=complex)
    for offset in range(n_seeds):
        seeded = ChannelParams(
            wavelength_lambda=params.wavelength_lambda,
            pathloss_mu=params.pathloss_mu,
            correlation_length=params.correlation_length,
            seed=base_seed + offset,
        )
        fading = build_fading_map(seeded, anchor, ANCHOR_BOB, bounds)
        values[offset] = fading.evaluate(np.vstack([a, b]))
    cross = np.mean(values[:, 0] * np.conj(values[:, 1]))
    power = math.sqrt(np.mean(np.abs(values[:, 0]) ** 2) * np.mean(np.abs(values[:, 1]) ** 2))
    return complex(cross / power)


def field_raster(field: ChannelField, bounds: PlaneBounds, resolution: float) -> list[dict[str, float]]:
    """|alpha| of both anchored maps on a regular grid, row-major in y then x."""
    if resolution <= 0:
        raise ValueError("raster resolution must be positive")
    xs = bounds.x_min + resolution * np.arange(int(math.floor(bounds.width / resolution + 1e-9)) + 1)
    ys = bounds.y_min + resolution * np.arange(int(math.floor(bounds.height / resolution + 1e-9)) + 1)
    grid_x, grid_y = np.meshgrid(xs, ys)
    points = np.column_stack([grid_x.ravel(), grid_y.ravel()])
    bob = np.abs(field.bob_map.evaluate(points))
    eve = np.abs(field.eve_map.evaluate(points))
    return [
        {"x": float(x), "y": float(y), "abs_alpha_bob": float(ab), "abs_alpha_eve": float(ae)}
        for (x, y), ab, ae in zip(points, bob, eve)
    ]
