"""
Immutable numeric domain objects.

Arrays stored on these objects are copied on construction and marked
read-only, so instances can be shared between worker threads.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np


def frozen_array(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class PlaneBounds:
    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self) -> None:
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError("plane_bounds_empty")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    def contains(self, point: np.ndarray) -> bool:
        x, y = float(point[0]), float(point[1])
        return self.x_min <= x <= self.x_max and self.y_min <= y <= self.y_max

    def clamp(self, point: np.ndarray) -> np.ndarray:
        return np.array(
            [min(max(float(point[0]), self.x_min), self.x_max), min(max(float(point[1]), self.y_min), self.y_max)]
        )

    def expanded(self, margin: float) -> PlaneBounds:
        return PlaneBounds(self.x_min - margin, self.y_min - margin, self.x_max + margin, self.y_max + margin)


@dataclass(frozen=True)
class HelperGeometry:
    center: np.ndarray
    disc_diameter_rho: float
    antenna_offsets: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "center", frozen_array(self.center))
        object.__setattr__(self, "antenna_offsets", frozen_array(self.antenna_offsets))
        if self.center.shape != (2,):
            raise ValueError("helper_center_not_2d")
        if self.antenna_offsets.ndim != 2 or self.antenna_offsets.shape[1] != 2:
            raise ValueError("antenna_offsets_not_2d")
        if self.antenna_offsets.shape[0] < 2:
            raise ValueError("helper_needs_two_antennas")
        if self.disc_diameter_rho <= 0:
            raise ValueError("rho_not_positive")
        radius = self.disc_diameter_rho / 2.0
        if np.any(np.linalg.norm(self.antenna_offsets, axis=1) > radius * (1.0 + 1e-12)):
            raise ValueError("antenna_outside_disc")

    @property
    def antenna_count(self) -> int:
        return int(self.antenna_offsets.shape[0])

    def moved_to(self, center: np.ndarray) -> HelperGeometry:
        return replace(self, center=center)


@dataclass(frozen=True)
class NetworkLayout:
    alice_pos: np.ndarray
    bob_pos: np.ndarray
    eve_pos: np.ndarray
    helpers: tuple[HelperGeometry, ...]
    plane_bounds: PlaneBounds

    def __post_init__(self) -> None:
        for name in ("alice_pos", "bob_pos", "eve_pos"):
            object.__setattr__(self, name, frozen_array(getattr(self, name)))
        object.__setattr__(self, "helpers", tuple(self.helpers))

    @property
    def helper_count(self) -> int:
        return len(self.helpers)

    @property
    def helper_centers(self) -> np.ndarray:
        if not self.helpers:
            return np.zeros((0, 2))
        return np.stack([helper.center for helper in self.helpers])

    @property
    def fixed_nodes(self) -> np.ndarray:
        """Alice, Bob and Eve positions, in that order."""
        return np.stack([self.alice_pos, self.bob_pos, self.eve_pos])

    def with_helper_centers(self, centers: np.ndarray) -> NetworkLayout:
        centers = np.asarray(centers, dtype=float)
        if centers.shape != (self.helper_count, 2):
            raise ValueError("helper_centers_shape_mismatch")
        helpers = tuple(helper.moved_to(center) for helper, center in zip(self.helpers, centers))
        return replace(self, helpers=helpers)


@dataclass(frozen=True)
class ChannelParams:
    wavelength_lambda: float
    pathloss_mu: float
    correlation_length: float | None = None
    seed: int = 0

    def __post_init__(self) -> None:
        if self.correlation_length is None:
            object.__setattr__(self, "correlation_length", self.wavelength_lambda / 2.0)
        if self.wavelength_lambda <= 0:
            raise ValueError("wavelength_not_positive")
        if self.pathloss_mu <= 0:
            raise ValueError("pathloss_not_positive")
        if self.correlation_length <= 0:
            raise ValueError("correlation_length_not_positive")

    @property
    def kernel_scale(self) -> float:
        # Knot weights exp(-d^2 / s^2) with s = L / sqrt(2) give field correlation exp(-d^2 / L^2).
        return self.correlation_length / math.sqrt(2.0)

    @property
    def knot_spacing(self) -> float:
        return self.correlation_length / 2.0


@dataclass(frozen=True)
class NullSpaceDesign:
    basis_E: np.ndarray
    leakage_phi: float
    weight_sq: float
    power_budget_P: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "basis_E", frozen_array(self.basis_E, dtype=complex))

    @property
    def antenna_count(self) -> int:
        return int(self.basis_E.shape[0])

    @property
    def beta_r(self) -> float:
        return self.power_budget_P / (self.antenna_count - 1)

    @property
    def interference_power(self) -> float:
        """|w_r|^2 * phi_r, the jamming power this helper delivers to Eve."""
        return self.weight_sq * self.leakage_phi


@dataclass(frozen=True)
class PowerConfig:
    source_power_Ps: float
    noise_floor_N0: float
    helper_budgets: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "helper_budgets", tuple(float(value) for value in self.helper_budgets))
        if self.source_power_Ps <= 0 or self.noise_floor_N0 <= 0:
            raise ValueError("power_not_positive")
        if any(budget <= 0 for budget in self.helper_budgets):
            raise ValueError("helper_budget_not_positive")


@dataclass(frozen=True)
class ControllerSettings:
    step_size: float = 0.2
    fd_step: float = 4e-4
    collision_weight: float = 1.0
    max_step_length: float = 0.1
    max_backtracks: int = 30
    ascent_rtol: float = 1e-3
    ascent_atol: float = 1e-9

    def __post_init__(self) -> None:
        if self.step_size <= 0 or self.fd_step <= 0 or self.max_step_length <= 0:
            raise ValueError("controller_steps_not_positive")
        if self.collision_weight < 0:
            raise ValueError("collision_weight_negative")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks_too_small")

    def ascent_tolerance(self, potential: float) -> float:
        return self.ascent_atol + self.ascent_rtol * abs(potential)


@dataclass(frozen=True)
class PotentialEval:
    phi_r: float
    phi_col: float
    phi_total: float
    gradient: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "gradient", frozen_array(self.gradient))


@dataclass(frozen=True)
class ControlStep:
    step_index: int
    helper_index: int
    proposed_velocity: np.ndarray
    step_size: float
    accepted_position: np.ndarray
    backtrack_count: int
    held: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "proposed_velocity", frozen_array(self.proposed_velocity))
        object.__setattr__(self, "accepted_position", frozen_array(self.accepted_position))


@dataclass(frozen=True)
class TrajectorySnapshot:
    step: int
    positions: np.ndarray
    phi: np.ndarray
    phi_col: np.ndarray
    objective: float
    secrecy_rate: float
    rate_supremum: float

    def __post_init__(self) -> None:
        for name in ("positions", "phi", "phi_col"):
            object.__setattr__(self, name, frozen_array(getattr(self, name)))


@dataclass(frozen=True)
class TrajectoryRecord:
    snapshots: tuple[TrajectorySnapshot, ...]
    steps: tuple[tuple[ControlStep, ...], ...] = field(default_factory=tuple)

    @property
    def initial(self) -> TrajectorySnapshot:
        return self.snapshots[0]

    @property
    def final(self) -> TrajectorySnapshot:
        return self.snapshots[-1]

    @property
    def rates(self) -> np.ndarray:
        return np.array([snapshot.secrecy_rate for snapshot in self.snapshots])
