import time

import pytest

from nonlocal_pop.cli import execute_scenario
from nonlocal_pop.config import get_preset

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


class TimedRun:
    def __init__(self, config):
        start = time.perf_counter()
        result = execute_scenario(config, write=False)
        self.seconds = time.perf_counter() - start
        self.config = config
        self.record = result.record
        self.summary = result.summary


@pytest.fixture(scope="session")
def fig1_run():
    return TimedRun(get_preset("fig1"))


@pytest.fixture(scope="session")
def fig1_stable_run():
    return TimedRun(get_preset("fig1").with_overrides(**{"params.d": 0.12, "scheme.t_end": 100.0}))


@pytest.fixture(scope="session")
def fig2_run():
    return TimedRun(get_preset("fig2"))


@pytest.fixture(scope="session")
def fig6_run():
    return TimedRun(get_preset("fig6"))


@pytest.fixture(scope="session")
def fig7_run():
    return TimedRun(get_preset("fig7"))


@pytest.fixture(scope="session")
def fig8_run():
    return TimedRun(get_preset("fig8"))
