import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from multshift import Full, SystemSpec, load_fixture  # noqa: E402
from multshift.config import fixture_names  # noqa: E402

EXAMPLE2 = [[0, 1, 1, 1, 1, 1]] * 3 + [[1, 1, 1, 0, 1, 0], [0, 1, 1, 1, 1, 1], [1, 1, 1, 0, 1, 0]]

TWO_D_FIXTURES = ["fullshift_3_2", "carpet_mcmullen", "sft_example2", "sft_figure1", "ly_counterexample"]


@pytest.fixture(scope="session")
def fixtures():
    return {name: load_fixture(name) for name in fixture_names()}


@pytest.fixture
def full32():
    return SystemSpec(2, (3, 2), Full())


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
