import numpy as np
import pytest

from gaugeqmt import ParamPoint, default_grid, landau_family


@pytest.fixture(scope="session")
def grid1():
    """Default Landau grid at B = 1."""
    return default_grid(1.0)


@pytest.fixture(scope="session")
def at1():
    return ParamPoint(B=1.0)


@pytest.fixture(scope="session")
def symmetric():
    return landau_family(0, 0.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    lines = [
        value
        for key in ("passed", "failed")
        for rep in terminalreporter.stats.get(key, [])
        if rep.when == "call"
        for name, value in rep.user_properties
        if name == "acceptance"
    ]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
