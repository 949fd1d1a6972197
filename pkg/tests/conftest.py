import numpy as np
import pytest
from hypothesis import settings

from swred.fields import explicit_torus_solution
from swred.spectral import TorusGrid

settings.register_profile("swred", deadline=None, max_examples=25, derandomize=True)
settings.load_profile("swred")


@pytest.fixture
def grid():
    return TorusGrid(32)


@pytest.fixture
def small_grid():
    return TorusGrid(16)


@pytest.fixture
def explicit(grid):
    return explicit_torus_solution(1.0, 0.0, grid)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = next((m for name, m in list(sys.modules.items())
                if name.endswith("test_acceptance") and hasattr(m, "VERDICTS")), None)
    lines = [mod.VERDICTS[k] for k in sorted(mod.VERDICTS)] if mod else []
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
