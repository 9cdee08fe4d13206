import numpy as np
import pytest

from bmtk.corpus import random_field, random_solenoidal, trial_rng
from bmtk.grid import Grid


@pytest.fixture
def grid32():
    return Grid(2, 32)


@pytest.fixture
def grid64():
    return Grid(2, 64)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def smooth_scalar(grid, seed, kmax=8, slope=1.0, trial=0):
    return random_field(grid, trial_rng(seed, trial, 0), kmax=kmax, slope=slope)


def smooth_velocity(grid, seed, kmax=8, slope=1.0, trial=0, amplitude=1.0):
    return random_solenoidal(grid, trial_rng(seed, trial, 1), kmax=kmax, slope=slope, amplitude=amplitude)


def rel(a, b):
    """Relative max-norm difference."""
    scale = max(np.max(np.abs(b)), 1e-300)
    return float(np.max(np.abs(a - b)) / scale)


# acceptance lines collected by tests/test_acceptance.py, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
