import functools
import sys
from pathlib import Path

import pytest

HERE = Path(__file__).parent
FIXTURES = HERE / "fixtures"
sys.path.insert(0, str(HERE))

from msrestore.pipeline import solve_scenario  # noqa: E402
from msrestore.scenario import load_scenario  # noqa: E402


def fixture_path(name: str) -> Path:
    return FIXTURES / f"{name}.json"


@functools.lru_cache(maxsize=None)
def scenario(name: str):
    return load_scenario(fixture_path(name))


@functools.lru_cache(maxsize=None)
def solved(name: str, steps=None, tier3_scale: float = 1.0):
    """Pipeline outcome, cached across the session since solves dominate test time."""
    return solve_scenario(scenario(name), steps=steps, tier_scale=(1.0, 1.0, tier3_scale))


@pytest.fixture
def two_feeder():
    return scenario("two_feeder_dg")
