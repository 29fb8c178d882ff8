import numpy as np
import pytest

from kinhy.mesh import SpatialGrid, VelocityGrid


@pytest.fixture(scope="session")
def vg16():
    return VelocityGrid(8.0, 16)


@pytest.fixture(scope="session")
def vg32():
    return VelocityGrid(8.0, 32)


@pytest.fixture(scope="session")
def vg64():
    """Fine grid used as a quadrature reference."""
    return VelocityGrid(10.0, 64)


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)


def periodic_grid(n=16, length=1.0):
    return SpatialGrid(n, n, length, length)


@pytest.fixture()
def grid16():
    return periodic_grid(16)
