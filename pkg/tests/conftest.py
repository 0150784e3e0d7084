import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from sparse_lab import GridSpec, gen_collection, gen_weight

settings.register_profile(
    "default",
    max_examples=25,
    deadline=None,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

# One pass/fail line per acceptance criterion, printed at session end so the
# lines survive pytest's output capture.
_criterion_lines: list[str] = []


def criterion_line(text: str) -> None:
    _criterion_lines.append(text)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if _criterion_lines:
        terminalreporter.section("acceptance criteria")
        for line in _criterion_lines:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def grid6() -> GridSpec:
    return GridSpec(1, 6)


@pytest.fixture(scope="session")
def coll6(grid6):
    return gen_collection(grid6, "random", seed=5)


@pytest.fixture(scope="session")
def weight6(grid6):
    return gen_weight(grid6, 1, "power", alpha=0.6)


@pytest.fixture(scope="session")
def weight6n2(grid6):
    return gen_weight(grid6, 2, "random_logsym", seed=9, spread=0.7)


@pytest.fixture()
def rng():
    return np.random.default_rng(1234)
