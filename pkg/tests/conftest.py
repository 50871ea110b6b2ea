import pytest

from bundlekit import fixtures
from bundlekit.kripke import KripkeModel
from bundlekit.neighborhood import ConvexNbhModel

# lines printed by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def twins():
    m = KripkeModel.from_json(fixtures.raw("twins_left"))
    n = KripkeModel.from_json(fixtures.raw("twins_right"))
    return m, n


def load_nbh_fixture(name):
    return ConvexNbhModel.from_json(fixtures.raw(name))
