import math

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from zklayer.domain import DomainSpec

settings.register_profile(
    "default",
    deadline=None,
    max_examples=25,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def small_dom():
    return DomainSpec(math.pi, math.pi, 2 * math.pi, 32, 8, 8)


@pytest.fixture
def rect_dom():
    return DomainSpec(1.0, 2.0, 5.0, 16, 6, 5)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = {}


@pytest.fixture
def verdict(request):
    """Record ``(tag, passed, detail)`` for the end-of-run summary."""

    def record(tag, passed, detail):
        line = f"[{tag}] {'PASS' if passed else 'FAIL'}  {detail}"
        ACCEPTANCE_LINES[tag] = line
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for tag in sorted(ACCEPTANCE_LINES, key=lambda t: int(t[1:])):
        terminalreporter.write_line(ACCEPTANCE_LINES[tag])
