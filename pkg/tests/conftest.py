import numpy as np
import pytest

from thermoisp import ProblemSpec, SpaceGrid, TimeGrid
from thermoisp.experiments import build_case

# lines reported by the acceptance suite, printed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def space():
    return SpaceGrid(50)


@pytest.fixture(scope="session")
def time():
    return TimeGrid(50)


@pytest.fixture(scope="session")
def problem(space, time):
    return ProblemSpec(space, time)


@pytest.fixture(scope="session")
def case():
    return build_case("f0", "1.2")


def smooth_field(rng, x, modes=5):
    """Random combination of sine modes with 1/k decay (zero at the boundary)."""
    k = np.arange(1, modes + 1)
    return np.sin(np.pi * np.outer(x, k)) @ (rng.normal(size=modes) / k)
