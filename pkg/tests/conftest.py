import numpy as np
import pytest

from vardesign.densities import ExpPower, Pareto, pstar
from vardesign.smoothness import SmoothnessModel, power_law_model


@pytest.fixture
def model():
    """alpha(t) = 1 + t with unit scale."""
    return power_law_model(1.0, 1.0, 1.0)


@pytest.fixture
def p_star(model):
    return pstar(model)


@pytest.fixture
def pareto2():
    return Pareto(-2.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(label, ok, detail)`` returns ``ok``."""

    def record(label, ok, detail):
        line = f"[{'PASS' if ok else 'FAIL'}] {label}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
