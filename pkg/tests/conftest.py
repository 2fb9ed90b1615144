import os
from pathlib import Path
import sys

import numpy as np
import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[1]
if str(PROJECT_ROOT) not in sys.path:
    sys.path.insert(0, str(PROJECT_ROOT))

SCENARIO_FILE = PROJECT_ROOT / "configs" / "secrecy_plane.env"

os.environ["APP_ENV"] = "test"
os.environ["LOG_FORMAT"] = "text"
os.environ["LOG_LEVEL"] = "WARNING"
os.environ["SWEEP_WORKERS"] = "1"
for key in list(os.environ):
    if key.startswith("JAMSIM_"):
        del os.environ[key]


@pytest.fixture(autouse=True)
def fresh_runtime():
    from jamsim.core.config import get_settings
    from jamsim.core.telemetry import reset_events

    get_settings.cache_clear()
    reset_events()
    yield
    reset_events()


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


@pytest.fixture
def scenario_config():
    """Default plane scenario; individual tests shrink steps and seeds through with_overrides."""
    from jamsim.schemas import ScenarioConfig

    return ScenarioConfig()


@pytest.fixture
def short_config(scenario_config):
    return scenario_config.with_overrides(steps=4, seeds=[0, 1, 2], helper_counts=[1, 2])


@pytest.fixture
def single_helper_state(scenario_config):
    from jamsim.services.harness import build_scenario

    return build_scenario(scenario_config, seed=0, helper_count=1)


@pytest.fixture
def complex_gaussian(rng):
    """CN(0, 1) draws of any shape from the shared test stream."""

    def draw(*shape: int) -> np.ndarray:
        return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2.0)

    return draw
