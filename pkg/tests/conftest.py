import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from qftlink.commutator import extract_Z
from qftlink.spectral import FieldPairModel

settings.register_profile(
    "qftlink", deadline=None, max_examples=40,
    suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("qftlink")


@pytest.fixture(scope="session")
def dual_model():
    """Massless model with the dual (c2) structure only."""
    return FieldPairModel.massless(0.0, 1.0)


@pytest.fixture(scope="session")
def z_report(dual_model):
    """Reference ``Z`` on the Hopf pair, computed once per session."""
    return extract_Z(dual_model)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


@pytest.fixture
def record():
    """Record one acceptance line and echo it."""
    def _record(number, passed, detail):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return passed
    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
