import math

import numpy as np
import pytest

from geotool.control import EllipseConstraint
from geotool.geometry import RobotParams

ACCEPTANCE_RESULTS = {}


@pytest.fixture
def params():
    return RobotParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def ellipse():
    """The reference constraint: semi-axis 0.3 along x, 0.6 along y."""
    return EllipseConstraint(0.3, 0.6)


@pytest.fixture
def ellipse_through_target():
    """Ellipse passing through (0, 0.3)."""
    return EllipseConstraint(0.6, 0.3)


def random_points(rng, n):
    return rng.uniform(-math.pi, math.pi, size=(n, 2))


def record_acceptance(key, passed, detail):
    ACCEPTANCE_RESULTS[key] = (passed, detail)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS):
        passed, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {key:<28s} {detail}")
