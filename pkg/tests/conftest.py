import sys

import pytest
from hypothesis import HealthCheck, settings

from dslab.model import ModelParams
from dslab.operators import Grid

settings.register_profile("dslab", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("dslab")


@pytest.fixture(scope="session")
def gn_params():
    return ModelParams(p=1.0, omega=0.5)


@pytest.fixture(scope="session")
def gn_grid(gn_params):
    return Grid.default(gn_params)


@pytest.fixture(scope="session")
def small_params():
    # coarse but well-sized grid for tests that diagonalize many times
    return ModelParams(p=1.0, omega=0.6)


@pytest.fixture(scope="session")
def small_grid(small_params):
    return Grid.default(small_params, 256)


def pytest_terminal_summary(terminalreporter):
    # one PASS/FAIL line per acceptance criterion that ran in this session
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "LINES", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for k in sorted(lines):
            terminalreporter.write_line(lines[k])
