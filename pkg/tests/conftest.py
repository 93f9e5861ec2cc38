"""Shared test configuration."""

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# FD-heavy properties can exceed the default deadline on slow machines;
# correctness here is about values, not latency.
settings.register_profile(
    "greenvar",
    deadline=None,
    max_examples=50,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("greenvar")


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


def interior_points(rng, count, radius=0.85, min_radius=0.0):
    """Random complex points in an annulus of the unit disk."""
    r = rng.uniform(min_radius, radius, count)
    th = rng.uniform(0.0, 2.0 * np.pi, count)
    return r * np.exp(1j * th)
