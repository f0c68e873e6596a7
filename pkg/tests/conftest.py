import numpy as np
import pytest

from levynoise.measures import AtomicMeasure


@pytest.fixture
def pair():
    """nu = delta_{-1} + delta_1, so m^2 = 2."""
    return AtomicMeasure.of([(-1.0, 1.0), (1.0, 1.0)])


@pytest.fixture
def five_atoms():
    return AtomicMeasure.of([(-2.0, 0.3), (-0.5, 1.1), (0.7, 0.8), (1.3, 0.5), (3.0, 0.2)])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)



def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion, shown even when output is captured."""
    import sys

    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "SUMMARIES", {}) if mod else {}
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
