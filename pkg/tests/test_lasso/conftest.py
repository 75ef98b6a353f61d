import numpy as np
import pytest

from randes.base.types import DataSet
from randes.contrib.lasso.lasso import LassoConfig


@pytest.fixture(scope="package")
def lasso_data():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((25, 8)) * np.linspace(0.5, 3.0, 8)
    theta = np.array([1.0, -0.8, 0.0, 0.0, 0.4, 0.0, 0.0, 0.0])
    return DataSet(x=x, y=x @ theta + 0.5 * rng.standard_normal(25))


@pytest.fixture(scope="package")
def small_data():
    rng = np.random.default_rng(11)
    x = rng.standard_normal((12, 4))
    return DataSet(x=x, y=x[:, 0] - 0.5 * x[:, 2] + 0.3 * rng.standard_normal(12))


@pytest.fixture(scope="package")
def strict_config():
    return LassoConfig(tol=1e-10, max_iter=100_000)


@pytest.fixture(scope="package")
def orthonormal_data():
    """X'X/n = I exactly, up to rounding."""
    rng = np.random.default_rng(3)
    q, _ = np.linalg.qr(rng.standard_normal((16, 5)))
    x = 4.0 * q
    return DataSet(x=x, y=x @ np.array([2.0, -1.0, 0.5, 0.0, 0.1]) + 0.3 * rng.standard_normal(16))
