import numpy as np
import pytest

from seqfusion import ConfusionMatrix

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def rng():
    return np.random.default_rng(20130218)


@pytest.fixture
def rates():
    return ConfusionMatrix.from_rates


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
