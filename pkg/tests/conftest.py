import numpy as np
import pytest

from measure_steer import DensityMatrix, TargetFrame

_ACCEPTANCE = []


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def frame():
    return TargetFrame.computational()


@pytest.fixture
def mixed():
    return DensityMatrix.maximally_mixed()


@pytest.fixture
def acceptance_log():
    """Record one pass/fail line per acceptance criterion."""

    def record(name, passed, detail=""):
        _ACCEPTANCE.append((name, passed, detail))
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in _ACCEPTANCE:
        status = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{status}] {name} {detail}".rstrip())
