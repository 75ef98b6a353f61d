import numpy as np
import pytest

from randes.base.types import DataSet, GroundTruth
from randes.simulation.design import SeedSpec, build_sigma2


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture(scope="session")
def seed():
    return SeedSpec(master_seed=42)


@pytest.fixture(scope="session")
def independent_truth():
    theta = np.zeros(20)
    theta[:3] = (2.0, 1.0, 0.5)
    return GroundTruth(theta=theta, sigma=np.eye(20), noise_var=1.0)


@pytest.fixture(scope="session")
def correlated_truth():
    theta = np.zeros(20)
    theta[:2] = (40.0, 40.0)
    return GroundTruth(theta=theta, sigma=build_sigma2(20), noise_var=1.0)


@pytest.fixture
def noiseless_data(rng):
    """y = x theta exactly with supp(theta) = {1, 2}."""
    x = rng.standard_normal((30, 8))
    theta = np.zeros(8)
    theta[:2] = (1.5, -2.0)
    return DataSet(x=x, y=x @ theta)


@pytest.fixture
def noisy_data(rng):
    x = rng.standard_normal((40, 6))
    theta = np.array([2.0, 1.0, 0.0, 0.0, 0.5, 0.0])
    return DataSet(x=x, y=x @ theta + rng.standard_normal(40))
