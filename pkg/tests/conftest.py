import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # tests/oracles.py

from railmimo.config import ScenarioConfig, dbm_to_watts


@pytest.fixture
def single_link_config():
    """L=1, K=1 with AP at x=100, TA at x=70, d_ve=50 (d = sqrt(3400))."""
    return ScenarioConfig(
        num_aps=1, num_tas=1, num_positions=4,
        railway_length=200.0, train_length=40.0, train_offset=50.0,
        vertical_distance=50.0, uplink_powers=[0.1],
        noise_power=dbm_to_watts(-96.0))


@pytest.fixture
def tiny_config():
    """L=3, K=2, N=2 fixture, small enough for brute-force cross checks."""
    return ScenarioConfig(
        num_aps=3, num_tas=2, num_positions=2,
        railway_length=600.0, train_length=200.0, train_offset=200.0,
        vertical_distance=35.0, uplink_powers=[1e-4, 5e-5])


def assert_rel_close(actual, expected, rel, label=""):
    actual, expected = float(actual), float(expected)
    denom = max(abs(expected), 1e-300)
    assert abs(actual - expected) / denom <= rel, \
        f"{label}: {actual!r} vs {expected!r} (rel err {abs(actual-expected)/denom:.3e})"
