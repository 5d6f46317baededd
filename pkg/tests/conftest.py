"""Pytest configuration: ensure project root is on sys.path for fraclap imports."""
import sys
from pathlib import Path

import numpy as np
import pytest

_root = Path(__file__).resolve().parent.parent
if str(_root) not in sys.path:
    sys.path.insert(0, str(_root))

from fraclap.geometry import Domain  # noqa: E402
from fraclap.gridfn import Grid  # noqa: E402


@pytest.fixture(autouse=True)
def clear_threads_env(monkeypatch):
    monkeypatch.delenv("FRACLAP_THREADS", raising=False)
    yield


@pytest.fixture
def unit_interval():
    """(−1, 1) with a 1025-point grid over its closure."""
    return Domain.interval(-1.0, 1.0), Grid.over(-1.0, 1.0, 1025)


@pytest.fixture
def rng():
    return np.random.default_rng(0)
