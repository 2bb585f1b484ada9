from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile(
    "default",
    max_examples=40,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(20240611)


# -- acceptance summary: one PASS/FAIL line per criterion ---------------------

_CRITERIA: dict[str, list[bool]] = {}


def pytest_runtest_logreport(report):
    name = report.nodeid.split("::")[-1]
    if "test_acceptance.py" not in report.nodeid or not name.startswith("test_criterion_"):
        return
    if report.when == "call" or report.outcome == "failed":
        key = name.split("[")[0][len("test_"):]
        _CRITERIA.setdefault(key, []).append(report.outcome == "passed")


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(_CRITERIA):
        verdict = "PASS" if all(_CRITERIA[key]) else "FAIL"
        terminalreporter.write_line(f"{verdict} {key}")
