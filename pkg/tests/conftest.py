import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("lindred", max_examples=25, deadline=None)
settings.load_profile("lindred")


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


# Pass/fail lines recorded by the acceptance suite, echoed in the terminal summary.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
