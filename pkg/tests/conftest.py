import numpy as np
import pytest

from openqmc.bath import BathSpec, discretize_bath
from openqmc.system import SystemSpec


@pytest.fixture(scope="session")
def weak_modes():
    """Paper's weak-coupling bath: omega_c=2.5, xi=0.2, beta=5, L=400."""
    return discretize_bath(BathSpec(L=400, omega_c=2.5, xi=0.2, beta=5.0))


@pytest.fixture(scope="session")
def strong_modes():
    """xi=0.4 variant used in the frequency/variance experiments."""
    return discretize_bath(BathSpec(L=400, omega_c=2.5, xi=0.4, beta=5.0))


@pytest.fixture(scope="session")
def free_modes():
    """Decoupled bath (xi=0): correlation vanishes identically."""
    return discretize_bath(BathSpec(L=400, omega_c=2.5, xi=0.0, beta=5.0))


@pytest.fixture
def spin():
    return SystemSpec(epsilon=1.0, delta=1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)
