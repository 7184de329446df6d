import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from gnmetric import FiniteSpace, GnMetric, RealSpace  # noqa: E402


@pytest.fixture
def reals():
    return RealSpace()


@pytest.fixture
def gmax3(reals):
    return GnMetric(reals, 3, "max_pairwise")


@pytest.fixture
def line4():
    """Points 0..3 on the line as a finite space."""
    return FiniteSpace.from_points([0.0, 1.0, 2.0, 3.0], "absolute")


@pytest.fixture
def random_finite():
    rng = np.random.default_rng(2024)
    pts = rng.uniform(-5, 5, size=(12, 2))
    return FiniteSpace.from_points(pts, "euclidean")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for num in sorted(results):
            terminalreporter.write_line(results[num])
