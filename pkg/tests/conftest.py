import numpy as np
import pytest

from jacmap import sphere_geom as sg
from jacmap import maps as mp


@pytest.fixture(scope="session")
def grid256():
    return sg.make_grid(256, 256)


@pytest.fixture(scope="session")
def sigma256(grid256):
    return sg.sigma_standard(grid256)


@pytest.fixture(scope="session")
def grid128():
    return sg.make_grid(128, 128)


@pytest.fixture(scope="session")
def sigma128(grid128):
    return sg.sigma_standard(grid128)


@pytest.fixture(scope="session")
def params_q1():
    return mp.CollapseParams(q=1)


@pytest.fixture(autouse=True)
def _quiet_numpy():
    with np.errstate(all="ignore"):
        yield
