import numpy as np
import pytest

from propshape.fixtures import asymmetric_blob, cube, icosphere
from propshape.mesh import TriangleMesh


@pytest.fixture
def unit_cube() -> TriangleMesh:
    return cube(side=1.0)


@pytest.fixture
def sphere() -> TriangleMesh:
    return icosphere(radius=1.0, subdivisions=3)


@pytest.fixture
def blob() -> TriangleMesh:
    return asymmetric_blob()


@pytest.fixture
def single_triangle() -> TriangleMesh:
    return TriangleMesh(np.array([[0.0, 0, 0], [1, 0, 0], [0, 1, 0]]),
                        np.array([[0, 1, 2]]))
