import numpy as np
import pytest

from msslab.boundary_data import get_map
from msslab.fixtures import disk_mesh
from msslab.mesh import domain_mesh, sphere_mesh


@pytest.fixture(scope="session")
def disk3():
    return disk_mesh(3)


@pytest.fixture(scope="session")
def disk4():
    return disk_mesh(4)


@pytest.fixture(scope="session")
def ball4_coarse():
    return domain_mesh("ball", {"dim": 4}, shells=4, refinement_level=1)


@pytest.fixture(scope="session")
def s3_level2():
    return sphere_mesh(3, 2)


@pytest.fixture(scope="session")
def s3_level3():
    return sphere_mesh(3, 3)


@pytest.fixture(scope="session")
def hopf():
    return get_map("hopf3")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
