"""Per-model quantities over a whole collection, vectorized by dimension.

Each profile is an array aligned with the collection's enumeration order.
"""
import numpy as np

from .collection import BaseCollection, OrderedCollection
from .exceptions import DimensionTooLarge, InvalidModel
from .regression import nested_empirical_losses, stacked_biases, stacked_empirical_losses
from .types import DataSet, GroundTruth


def check_fits(c: BaseCollection, n: int, p: int) -> None:
    """Reject collections with models that cannot be fitted on n observations of p covariates."""
    if c.p != p:
        raise InvalidModel(f"Collection is over p={c.p} covariates but the data has p={p}.")
    if c.max_dim >= n:
        d = next(d for d in range(n, c.max_dim + 1) if c.count_at(d))
        m = c.first_at(d)
        raise DimensionTooLarge(f"Model {{{m}}} has dimension {d} >= n={n}.", model=m)


def residual_profile(data: DataSet, c: BaseCollection) -> np.ndarray:
    """gamma_n(theta_hat_m) for every model of `c`.

    An ordered collection costs a single QR factorization; other kinds take one stacked QR per block.
    """
    check_fits(c, data.n, data.p)
    if isinstance(c, OrderedCollection):
        return nested_empirical_losses(data, c.dmax)
    parts = [stacked_empirical_losses(data, columns) for _, columns in c.blocks()]
    return np.concatenate(parts) if parts else np.empty(0)


def bias_profile(truth: GroundTruth, c: BaseCollection) -> np.ndarray:
    """l(theta_m, theta) for every model of `c`."""
    if c.p != truth.p:
        raise InvalidModel(f"Collection is over p={c.p} covariates but the truth has p={truth.p}.")
    parts = [stacked_biases(truth, columns) for _, columns in c.blocks()]
    return np.concatenate(parts) if parts else np.empty(0)


def risk_profile(truth: GroundTruth, c: BaseCollection, n: int) -> np.ndarray:
    """Closed-form risk E[l(theta_hat_m, theta)] for every model of `c`."""
    if c.max_dim > n - 2:
        raise DimensionTooLarge(f"Closed-form risk needs n - d_m - 1 >= 1, got n={n}, d_max={c.max_dim}.")
    biases = bias_profile(truth, c)
    dims = c.dimensions()
    return biases + (truth.noise_var + biases) * dims / (n - dims - 1)
