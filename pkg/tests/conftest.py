import numpy as np
import pytest

from magicangles import _accel

ACCEPTANCE_LINES = []


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: takes more than a few seconds")
    config.addinivalue_line("markers", "acceptance: end-to-end acceptance criterion")


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240531)


@pytest.fixture(params=["numba", "numpy"])
def backend(request):
    previous = _accel.set_backend(request.param)
    yield request.param
    _accel.set_backend(previous)
