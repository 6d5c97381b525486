import itertools
import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


def all_assignments(n):
    return [tuple(bits) for bits in itertools.product((0, 1), repeat=n)]


def dense_energy(entries, offset, x):
    """Independent oracle: plain double loop over the entry map."""
    total = offset
    for (i, j), v in entries.items():
        total += v * x[i] * x[j]
    return total


def brute_min(q):
    return min(dense_energy(q.entries, q.offset, x) for x in all_assignments(q.n))


def close(a, b, rel=1e-9):
    return abs(a - b) <= rel * max(1.0, abs(a), abs(b))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
