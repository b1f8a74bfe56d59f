import numpy as np
import pytest

from lpcentroid import Ellipsoid, Polytope, RadialField, SphereGrid, cone_profile


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def circle():
    return SphereGrid.circle(1024)


@pytest.fixture(scope="session")
def square():
    return Polytope([[1.0, 1.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, -1.0]])


@pytest.fixture(scope="session")
def disk():
    return Ellipsoid.ball(2)


@pytest.fixture(scope="session")
def cone_field():
    return RadialField(cone_profile(), Ellipsoid.ball(2))
