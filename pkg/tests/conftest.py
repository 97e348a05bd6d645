import numpy as np
import pytest

from hypframes import cli
from hypframes.geometry import build_spatial_grid
from hypframes.hft import build_spectral_grid

ACCEPTANCE: dict = {}


@pytest.fixture(scope="session")
def cfg():
    return cli.ExperimentConfig()


@pytest.fixture(scope="session")
def grids(cfg):
    """Default frame grids (graded spatial grid, 192 x 128 spectral grid)."""
    return cli.grids(cfg)


@pytest.fixture(scope="session")
def grid(grids):
    return grids[0]


@pytest.fixture(scope="session")
def sgrid(grids):
    return grids[1]


@pytest.fixture(scope="session")
def small_grid():
    return build_spatial_grid(3.0, 24, 32, spacing=0.06)


@pytest.fixture(scope="session")
def coarse_sgrid():
    return build_spectral_grid(8.0, 64, 32)


@pytest.fixture(scope="session")
def frame(cfg):
    return cli.get_frame(cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def record(criterion: int, passed: bool, detail: str) -> str:
    line = f"CRITERION {criterion}: {'PASS' if passed else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
