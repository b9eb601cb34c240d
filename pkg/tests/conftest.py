import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "default", max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow]
)
settings.register_profile("ci", max_examples=200, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

import pytest

_CRITERIA_LINES = []


@pytest.fixture(scope="session")
def criterion_log():
    """Call ``log(number, title, ok, detail)`` once per acceptance criterion."""

    def log(number, title, ok, detail):
        line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
        _CRITERIA_LINES.append((number, line))
        print(line)
        return ok

    return log


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA_LINES:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA_LINES):
            terminalreporter.write_line(line)
