import pytest
from hypothesis import settings

from rumorlab.model import make_exponential_capped

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def nocap():
    return make_exponential_capped(1.0)


@pytest.fixture(scope="session")
def cap03():
    return make_exponential_capped(0.3)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
