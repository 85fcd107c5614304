import numpy as np
import pytest

from microcavity.physics import derive_rates, reference_geometry, rb85_d2


@pytest.fixture(scope="session")
def geom():
    return reference_geometry()


@pytest.fixture(scope="session")
def rates(geom):
    return derive_rates(rb85_d2(), geom)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


_CRITERIA = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, ok, detail)`` prints it and asserts ``ok``."""

    def record(number, ok, detail):
        line = f"criterion {number}: {'PASS' if ok else 'FAIL'}  {detail}"
        _CRITERIA.append(line)
        print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERIA:
            terminalreporter.write_line(line)
