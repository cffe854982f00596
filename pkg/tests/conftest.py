import sys

import pytest

from shuttlepipe.trajectory import DETECTED, TrajectoryPoint


def make_points(coords, confidence=0.9):
    """Dense trajectory from a list of (x, y) or None."""
    return [
        TrajectoryPoint(i) if c is None else TrajectoryPoint(i, (float(c[0]), float(c[1])), confidence, DETECTED)
        for i, c in enumerate(coords)
    ]


@pytest.fixture
def points_from():
    return make_points


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
