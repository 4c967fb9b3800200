import numpy as np
import pytest

from patswarm.acoustics import Medium, Pose, default_board


@pytest.fixture(scope="session")
def medium():
    return Medium()


@pytest.fixture(scope="session")
def board(medium):
    return default_board(Pose(), medium)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    mod = __import__("sys").modules.get("test_acceptance") or __import__("sys").modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.summary_lines():
        terminalreporter.write_line(line)
