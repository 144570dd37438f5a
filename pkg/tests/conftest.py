import numpy as np
import pytest

_criteria = []


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def criterion():
    """Record one acceptance criterion verdict for the end-of-run summary."""

    def record(number, name, passed, detail=""):
        """``passed=None`` marks a criterion that could not run here."""
        _criteria.append((number, name, None if passed is None else bool(passed), detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for number, name, passed, detail in sorted(_criteria, key=lambda c: c[0]):
        verdict = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] criterion {number}: {name}  {detail}".rstrip())
