import numpy as np
import pytest

from excess_noise.basis import make_box_basis
from excess_noise.coupling import build_coupling, interval_profile

_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance-criterion line for the terminal summary."""

    def record(label, passed, detail=""):
        _CRITERIA.append((label, bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for label, passed, detail in _CRITERIA:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'}  {label}  {detail}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def box6():
    return make_box_basis(6, np.pi, 513)


@pytest.fixture(scope="session")
def interval_gain(box6):
    return build_coupling(box6, interval_profile(box6.grid, 0.3, 1.7, 1.0))


@pytest.fixture(scope="session")
def interval_loss(box6):
    return build_coupling(box6, interval_profile(box6.grid, 2.0, np.pi, 2.0, "loss"))
