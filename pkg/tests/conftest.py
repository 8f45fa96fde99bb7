import numpy as np
import pytest

from ghqlab.lattice import LatticeSpacetime
from ghqlab.ops import build_dalembert, build_dirac_1p1
from ghqlab.green import GreenPair


@pytest.fixture
def lat():
    return LatticeSpacetime(24, 8, 0.1, 0.25)


@pytest.fixture
def lat_small():
    return LatticeSpacetime(16, 8, 0.1, 0.25)


@pytest.fixture
def wave(lat):
    return build_dalembert(lat, 1.0)


@pytest.fixture
def wave_massless(lat):
    return build_dalembert(lat, 0.0)


@pytest.fixture
def dirac(lat):
    return build_dirac_1p1(lat, 1.0)


@pytest.fixture
def gp_wave(wave):
    return GreenPair(wave)


@pytest.fixture
def gp_dirac(dirac):
    return GreenPair(dirac)


@pytest.fixture
def rng():
    return np.random.default_rng(20250810)
