from pathlib import Path
from typing import Annotated, Any, Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, NoDecode, SettingsConfigDict

from jamsim.core.errors import ConfigError
from jamsim.services.geometry import default_antenna_radius

ENV_PREFIX = "JAMSIM_"


def _split_csv(value: Any) -> Any:
    if isinstance(value, str):
        return [item.strip() for item in value.split(",") if item.strip()]
    return value


class ScenarioConfig(BaseSettings):
    """
    One experiment scenario. Loaded from a ``KEY=value`` file whose keys carry
    the ``JAMSIM_`` prefix; list and pair values are comma separated. Lengths
    are meters, powers are relative to the receiver noise floor.
    """

    model_config = SettingsConfigDict(env_prefix=ENV_PREFIX, extra="forbid", frozen=True)

    plane_width: float = Field(default=3.0, gt=0)
    plane_height: float = Field(default=5.0, gt=0)
    alice_pos: Annotated[tuple[float, float], NoDecode] = (1.5, 0.1)
    bob_pos: Annotated[tuple[float, float], NoDecode] = (1.5, 4.9)
    eve_pos: Annotated[tuple[float, float], NoDecode] = (1.5, 4.1)

    helper_count: int = Field(default=1, ge=1)
    helper_counts: Annotated[list[int], NoDecode] = Field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    antennas_per_helper: int = Field(default=2, ge=2)
    rho: float = Field(default=0.25, gt=0)

    wavelength: float = Field(default=0.4, gt=0)
    pathloss_exponent: float = Field(default=3.5, gt=0)
    correlation_length: float | None = Field(default=None, gt=0)
    fading_model: Literal["correlated", "none"] = "correlated"

    bob_snr_db: float = 20.0
    jnnr_db: float = 17.0
    noise_floor: float = Field(default=1.0, gt=0)
    jnnr_sweep_db: Annotated[list[float], NoDecode] = Field(default_factory=lambda: [5.0, 8.0, 11.0, 14.0, 17.0, 20.0, 23.0])

    steps: int = Field(default=150, ge=0)
    seeds: Annotated[list[int], NoDecode] = Field(default_factory=lambda: list(range(20)))
    init_jitter_gamma: float = Field(default=0.1, gt=0, lt=0.5)

    step_size: float = Field(default=0.2, gt=0)
    fd_step: float | None = Field(default=None, gt=0)
    max_step_length: float | None = Field(default=None, gt=0)
    collision_weight: float = Field(default=1.0, ge=0)
    max_backtracks: int = Field(default=30, ge=1)
    multi_start: int = Field(default=0, ge=0)
    multi_start_candidates: int = Field(default=256, ge=1)
    raster_resolution: float = Field(default=0.05, gt=0)

    @field_validator("alice_pos", "bob_pos", "eve_pos", "helper_counts", "seeds", "jnnr_sweep_db", mode="before")
    @classmethod
    def parse_csv(cls, value: Any) -> Any:
        return _split_csv(value)

    @field_validator("seeds")
    @classmethod
    def validate_seeds(cls, value: list[int]) -> list[int]:
        if not value:
            raise ValueError("seeds must not be empty")
        if len(set(value)) != len(value):
            raise ValueError("seeds must be unique")
        return value

    @field_validator("helper_counts")
    @classmethod
    def validate_helper_counts(cls, value: list[int]) -> list[int]:
        if not value or any(count < 1 for count in value):
            raise ValueError("helper_counts must be a non-empty list of positive integers")
        return value

    @model_validator(mode="after")
    def validate_geometry(self) -> "ScenarioConfig":
        for name in ("alice_pos", "bob_pos", "eve_pos"):
            x, y = getattr(self, name)
            if not (0.0 <= x <= self.plane_width and 0.0 <= y <= self.plane_height):
                raise ValueError(f"{name} lies outside the {self.plane_width} x {self.plane_height} m plane")
        if self.resolved_fd_step >= self.wavelength:
            raise ValueError("fd_step must be much smaller than the wavelength")
        if default_antenna_radius(self.antennas_per_helper, self.wavelength) > self.rho / 2.0:
            raise ValueError("rho is too small to hold the antenna layout")
        if self.multi_start > self.multi_start_candidates:
            raise ValueError("multi_start cannot exceed multi_start_candidates")
        return self

    @property
    def resolved_fd_step(self) -> float:
        return self.fd_step if self.fd_step is not None else self.wavelength / 1000.0

    @property
    def resolved_max_step_length(self) -> float:
        return self.max_step_length if self.max_step_length is not None else self.wavelength / 4.0

    def with_overrides(self, **overrides: Any) -> "ScenarioConfig":
        """Validated copy; environment variables are not consulted again."""
        data = self.model_dump()
        data.update({key: value for key, value in overrides.items() if value is not None})
        return type(self).model_validate(data)

    def to_env_lines(self) -> list[str]:
        lines: list[str] = []
        for name, value in self.model_dump().items():
            if value is None:
                continue
            if isinstance(value, (list, tuple)):
                rendered = ",".join(repr(item) for item in value)
            elif isinstance(value, float):
                rendered = repr(value)
            else:
                rendered = str(value)
            lines.append(f"{ENV_PREFIX}{name.upper()}={rendered}")
        return lines


def load_scenario_config(path: str | Path) -> ScenarioConfig:
    config_path = Path(path)
    if not config_path.is_file():
        raise ConfigError(f"config file not found: {config_path}")
    return ScenarioConfig(_env_file=config_path, _env_file_encoding="utf-8")


class RateReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    secrecy_rate: float
    rate_supremum: float
    bob_snr_term: float
    eve_sinr_term: float
    total_leakage: float

    @property
    def clamped_rate(self) -> float:
        return max(0.0, self.secrecy_rate)


class TrajectoryRow(BaseModel):
    helper_count: int
    seed: int
    step: int
    helper_index: int
    x: float
    y: float
    phi_r: float
    phi_col: float
    objective: float
    secrecy_rate: float


class AggregateRow(BaseModel):
    helper_count: int
    step: int
    median_rate: float
    q25: float
    q75: float
    r_sup: float


class FailureRow(BaseModel):
    helper_count: int
    seed: int
    code: str
    message: str


class PowerSweepRow(BaseModel):
    jnnr_db: float
    median_stationary_rate: float
    median_mobile_rate: float
    r_sup: float
