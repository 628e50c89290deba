from __future__ import annotations

import os

import pytest
from hypothesis import HealthCheck, settings

from kslab.model import ModelParams
from kslab.profile import match_profile

settings.register_profile("kslab", max_examples=30, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "kslab"))

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def params3():
    return ModelParams(3, 0.5)


@pytest.fixture(scope="session")
def matched3(params3):
    return match_profile(params3, 20.0)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
