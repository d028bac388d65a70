"""
Shared fixtures and hypothesis strategies for the strichartz test suite.
"""

import math
import os
import sys

import numpy as np
import pytest
from hypothesis import strategies as st

# Tests live in tests/, the package one level up
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from strichartz.models import AscentConfig, FourierVector  # noqa: E402


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long acceptance runs (threshold scans, stability)")


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


@pytest.fixture
def fast_cfg():
    """Ascent settings with few restarts for quick searches."""
    return AscentConfig(restarts=4, seed=0)


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    """Run inside an empty directory so settings.json and logs/ are local."""
    monkeypatch.chdir(tmp_path)
    monkeypatch.delenv("STRICHARTZ_THREADS", raising=False)
    return tmp_path


coefficient = st.builds(
    complex,
    st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False),
    st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False),
)


@st.composite
def fourier_vectors(draw, max_width: int = 6, real: bool = False):
    """Nonzero FourierVectors with modest support and coefficients in the unit box."""
    width = draw(st.integers(1, max_width))
    n_min = draw(st.integers(-4, 4))
    part = st.floats(-1.0, 1.0, allow_nan=False, allow_infinity=False)
    values = draw(st.lists(part if real else coefficient, min_size=width, max_size=width))
    values = [complex(v) for v in values]
    # keep away from the zero vector so relative comparisons make sense
    if math.fsum(abs(v) ** 2 for v in values) < 1e-2:
        values[0] = 1.0 + 0j
    return FourierVector(n_min, values)
