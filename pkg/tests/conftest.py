import numpy as np
import pytest

from systolab.geometry import sphere_rule

_ACCEPTANCE = []


@pytest.fixture
def acceptance_line():
    """Record one pass/fail line per acceptance criterion for the summary."""

    def record(number, passed, detail):
        _ACCEPTANCE.append((number, "PASS" if passed else "FAIL", detail))

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, status, detail in sorted(_ACCEPTANCE):
        terminalreporter.write_line(f"[{status}] criterion {number}: {detail}")


@pytest.fixture(scope="session")
def rule32():
    return sphere_rule(32)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
