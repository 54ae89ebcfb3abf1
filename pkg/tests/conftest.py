import numpy as np
import pytest

from geomphase import SystemParams, to_angular

# (criterion label, passed, detail) collected by the acceptance tests
ACCEPTANCE_LINES = []


@pytest.fixture
def params():
    return SystemParams(delta=to_angular(40.0), chi=to_angular(-1.0))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(ACCEPTANCE_LINES, key=lambda r: r[0]):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}: {detail}")
