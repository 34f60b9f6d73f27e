import numpy as np
import pytest

from sc3sim.hashcore import HashParams, gen_params, params_for_q


@pytest.fixture(scope="session")
def tiny():
    """q=5, r=11, b=2, so g=4."""
    return HashParams.from_qrb(5, 11, 2)


@pytest.fixture(scope="session")
def big():
    return gen_params(31, 62, seed=7)


@pytest.fixture(scope="session")
def q11():
    return params_for_q(11, seed=3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
