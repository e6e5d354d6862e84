import pytest

from reflex.algebra import UniversalSet

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def U():
    return UniversalSet(("alpha", "beta"))


@pytest.fixture
def S(U):
    return U.parse_set


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
