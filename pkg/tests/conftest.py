import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from rop.model import ChannelState, SystemParams

settings.register_profile("default", max_examples=200, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

# Filled by test_acceptance.py; echoed once at the end of the run.
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def unit_channel():
    return ChannelState(h1=1.0, g1=1.0, f=1.0, h2=0.0, g2=1.0)


@pytest.fixture
def sp():
    return SystemParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
