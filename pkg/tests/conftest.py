import pytest

from kanskew import kan_diffeo, kan_endo

ACCEPTANCE_LINES = {}


@pytest.fixture(scope="session")
def kan():
    return kan_diffeo()


@pytest.fixture(scope="session")
def endo():
    return kan_endo()


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
