"""Shared fixtures and the acceptance-criteria summary hook.

Tests marked ``@pytest.mark.criterion("<name>")`` contribute one
PASS/FAIL/SKIP line to a terminal section printed after the run, so the
acceptance gate can be read at a glance.
"""

import numpy as np
import pytest

_CRITERIA: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line(
        "markers", "criterion(name): label this test as one acceptance criterion"
    )


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("criterion")
    if marker is None:
        return
    name = marker.args[0]
    if rep.when == "call":
        _CRITERIA[name] = rep.outcome
    elif rep.when == "setup" and rep.outcome in ("skipped", "failed"):
        _CRITERIA[name] = rep.outcome


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    words = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}
    for name, outcome in _CRITERIA.items():
        word = words.get(outcome, outcome.upper())
        terminalreporter.write_line(f"{word}  {name}")


@pytest.fixture
def rng():
    return np.random.default_rng(20260818)
