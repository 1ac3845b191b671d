import numpy as np
import pytest

from elastiforms.grid import Chart, build_grid
from elastiforms.geometry import make_metric


@pytest.fixture
def unit_grid():
    return build_grid(Chart("body"), (9, 9, 9))


@pytest.fixture
def small_grid():
    return build_grid(Chart("body"), (5, 5, 5))


@pytest.fixture
def cyl_grid():
    chart = Chart("cyl", ranges=((1.0, 2.0), (0.0, 1.0), (0.0, 1.0)),
                  coordinate_system="cylindrical")
    return build_grid(chart, (9, 9, 9))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def eye_metric(grid, representation="convective"):
    return make_metric(representation, np.broadcast_to(np.eye(3), grid.shape + (3, 3)).copy())


@pytest.fixture
def euclid(unit_grid):
    return eye_metric(unit_grid)
