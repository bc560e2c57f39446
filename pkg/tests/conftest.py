import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=60, suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

GRID = [(4, 1, 2), (4, 2, 1), (5, 2, 2), (6, 2, 2), (6, 3, 2), (6, 2, 3)]


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)
