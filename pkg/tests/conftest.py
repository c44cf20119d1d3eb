import os
import sys

import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

sys.path.insert(0, os.path.dirname(__file__))

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", deadline=None, max_examples=500,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

C_VALUES = (0.6, 0.8, 1.5, 1.9)


@st.composite
def d_points(draw, c=None, margin=1e-3):
    """(a, v, c) strictly inside D_c with v in a bounded window."""
    if c is None:
        c = draw(st.sampled_from(C_VALUES))
    a = draw(st.floats(margin, c, allow_nan=False))
    lo = max(c - 1.0 - a, -1.0) + margin
    hi = c + 1.0
    v = draw(st.floats(lo, hi, allow_nan=False))
    return a, v, c


@st.composite
def delta_points(draw, c=None, margin=1e-3):
    """(a, v, c) in D_c with v in Delta_c."""
    if c is None:
        c = draw(st.sampled_from(C_VALUES))
    if c > 1.0:
        v = draw(st.floats(margin, c - 1.0 - margin))
    else:
        v = draw(st.floats(c - 1.0 + margin, -margin))
    a = draw(st.floats(max(c - 1.0 - v, 0.0) + margin, c))
    return a, v, c


def random_d_points(rng, n, c):
    A = rng.uniform(0.0, c, n)
    lo = np.maximum(c - 1.0 - A, -1.0)
    V = lo + rng.uniform(0.0, 1.0, n) * (c + 1.0 - lo)
    keep = (A > 1e-6) & (V - lo > 1e-6)
    return A[keep], V[keep]


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240601)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for n in sorted(results):
            terminalreporter.write_line(results[n])
