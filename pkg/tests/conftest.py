import random

import pytest
from hypothesis import HealthCheck, settings

from slicecount.generators import running_example

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
    derandomize=True,
)
settings.load_profile("default")


@pytest.fixture(scope="session")
def fig1():
    """The worked example program and its label -> index map."""
    return running_example()


def x(*vs):
    """Monomial over the 1-based variable names x1..x9 of the worked example."""
    return tuple(sorted(v - 1 for v in vs))


@pytest.fixture
def rng():
    return random.Random(1234)


# one line per acceptance criterion, filled in by test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
