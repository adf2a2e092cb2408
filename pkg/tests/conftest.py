import numpy as np
import pytest

from poisson_averaging import AveragedMap, make_duffing, make_harmonic_potential, make_zero_hopf

# a101 = 1, b011 = 0, c020 = 1, c002 = -2, c200 = 0
HARMONIC_ORACLE_F = [{"1 0 1": 1.0}, {}, {"0 2 0": 1.0, "0 0 2": -2.0}]

# a120 = 8, a101 = 2, c020 = 2, c021 = 6, c003 = -1 with P(s) = s
CUBIC_ORACLE_F = [{"1 2 0": 8.0, "1 0 1": 2.0}, {}, {"0 2 0": 2.0, "0 2 1": 6.0, "0 0 3": -1.0}]

DUFFING_F = [{"0 0 3": 1.0}, {}, {}]


@pytest.fixture(scope="session")
def harmonic():
    return make_harmonic_potential(None, HARMONIC_ORACLE_F)


@pytest.fixture(scope="session")
def harmonic_map(harmonic):
    return AveragedMap(harmonic.sf)


@pytest.fixture(scope="session")
def cubic():
    return make_zero_hopf({"1": 1.0}, CUBIC_ORACLE_F)


@pytest.fixture(scope="session")
def cubic_map(cubic):
    return AveragedMap(cubic.sf)


@pytest.fixture(scope="session")
def duffing():
    return make_duffing(DUFFING_F)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
