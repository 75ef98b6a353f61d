"""Least squares over a model, empirical and population losses, closed-form risks.

Population quantities always take a `GroundTruth`; nothing here estimates gamma(.) from data.
"""
import numpy as np
from scipy import linalg

from .exceptions import DimensionTooLarge, InvalidModel, LengthMismatch, RankDeficient, SingularSubmatrix
from .types import DataSet, FitResult, GroundTruth, Model

RANK_TOLERANCE = 1e-12


def _check_length(vector: np.ndarray, p: int, name: str) -> np.ndarray:
    vector = np.asarray(vector, dtype=float)
    if vector.shape != (p,):
        raise LengthMismatch(f"{name} has shape {vector.shape}, expected ({p},).")
    return vector


def _deficient(diagonals: np.ndarray) -> np.ndarray:
    """Rank test on |diag(R)|, relative to the largest entry of each R."""
    magnitudes = np.abs(diagonals)
    return magnitudes.min(axis=-1) <= RANK_TOLERANCE * magnitudes.max(axis=-1)


def empirical_loss(data: DataSet, theta_prime: np.ndarray) -> float:
    theta_prime = _check_length(theta_prime, data.p, "theta_prime")
    residual = data.y - data.x @ theta_prime
    return float(residual @ residual) / data.n


def fit_least_squares(data: DataSet, m: Model) -> FitResult:
    """Minimize ||Y - X theta'||_n^2 over vectors supported on `m`.

    Solved through a QR factorization of the n x d_m submatrix. The empty model returns the zero vector.

    Raises:
        DimensionTooLarge: if d_m >= n.
        RankDeficient: if some |R_jj| falls below 1e-12 times the largest one.
    """
    m.check_within(data.p)
    if m.dim >= data.n:
        raise DimensionTooLarge(f"Model {m} has dimension {m.dim} >= n={data.n}.", model=m)

    coefficients = np.zeros(data.p)
    if m.dim == 0:
        return FitResult(coefficients=coefficients, empirical_loss=float(data.y @ data.y) / data.n, model=m)

    design = data.x[:, m.columns]
    q, r = np.linalg.qr(design)
    if _deficient(np.diagonal(r)):
        raise RankDeficient(f"Design restricted to model {m} is rank deficient.")

    beta = linalg.solve_triangular(r, q.T @ data.y)
    coefficients[m.columns] = beta
    residual = data.y - design @ beta
    return FitResult(coefficients=coefficients, empirical_loss=float(residual @ residual) / data.n, model=m)


def stacked_empirical_losses(data: DataSet, columns: np.ndarray) -> np.ndarray:
    """Empirical loss of the least-squares fit for a stack of same-dimension models.

    Args:
        data: observations.
        columns: integer array of shape (count, d), one row of 0-based column positions per model.

    Returns:
        Array of length count, gamma_n(theta_hat_m) for each row.
    """
    count, d = columns.shape
    if d == 0:
        return np.full(count, float(data.y @ data.y) / data.n)
    if d >= data.n:
        raise DimensionTooLarge(f"Models of dimension {d} are too large for n={data.n}.")

    # (n, count, d) -> (count, n, d)
    design = np.moveaxis(data.x[:, columns], 0, 1)
    q, r = np.linalg.qr(design)
    deficient = _deficient(np.diagonal(r, axis1=1, axis2=2))
    if deficient.any():
        first = Model.from_columns(columns[np.argmax(deficient)])
        raise RankDeficient(f"Design restricted to model {first} is rank deficient.")

    projection = np.einsum("cnd,n->cd", q, data.y)
    residual = data.y - np.einsum("cnd,cd->cn", q, projection)
    return np.einsum("cn,cn->c", residual, residual) / data.n


def nested_qr(data: DataSet, max_dim: int):
    """QR of the first `max_dim` columns, shared by every model of an ordered collection."""
    if max_dim > data.p:
        raise InvalidModel(f"Ordered collection up to {max_dim} exceeds p={data.p}.")
    if max_dim >= data.n:
        raise DimensionTooLarge(f"Ordered collection up to {max_dim} is too large for n={data.n}.")
    q, r = np.linalg.qr(data.x[:, :max_dim])
    diagonal = np.abs(np.diagonal(r))
    # Each prefix {1..d} has its own R, the leading d x d block.
    running_max = np.maximum.accumulate(diagonal)
    if np.any(diagonal <= RANK_TOLERANCE * running_max):
        first = int(np.argmax(diagonal <= RANK_TOLERANCE * running_max)) + 1
        raise RankDeficient(f"Design restricted to the first {first} covariates is rank deficient.")
    return q, r


def nested_empirical_losses(data: DataSet, max_dim: int) -> np.ndarray:
    """gamma_n(theta_hat_m) for m_0 = {}, m_1 = {1}, ..., m_max_dim."""
    total = float(data.y @ data.y)
    if max_dim == 0:
        return np.array([total / data.n])
    q, _ = nested_qr(data, max_dim)
    explained = np.cumsum((q.T @ data.y) ** 2)
    return np.maximum(total - np.concatenate(([0.0], explained)), 0.0) / data.n


def nested_coefficients(data: DataSet, max_dim: int) -> np.ndarray:
    """Row d holds theta_hat for the model {1, ..., d}."""
    coefficients = np.zeros((max_dim + 1, data.p))
    if max_dim == 0:
        return coefficients
    q, r = nested_qr(data, max_dim)
    projection = q.T @ data.y
    for d in range(1, max_dim + 1):
        coefficients[d, :d] = linalg.solve_triangular(r[:d, :d], projection[:d])
    return coefficients


def population_loss(truth: GroundTruth, theta1: np.ndarray, theta2: np.ndarray) -> float:
    """l(theta1, theta2) = E[(X theta1 - X theta2)^2] = (theta1 - theta2)' Sigma (theta1 - theta2)."""
    diff = _check_length(theta1, truth.p, "theta1") - _check_length(theta2, truth.p, "theta2")
    return max(float(diff @ truth.sigma @ diff), 0.0)


def project_theta(truth: GroundTruth, m: Model) -> np.ndarray:
    """theta_m, the minimizer of gamma(.) over vectors supported on m."""
    m.check_within(truth.p)
    theta_m = np.zeros(truth.p)
    if m.dim == 0:
        return theta_m

    columns = m.columns
    try:
        factor = linalg.cho_factor(truth.sigma[np.ix_(columns, columns)])
    except linalg.LinAlgError as e:
        raise SingularSubmatrix(f"Sigma restricted to model {m} is singular.") from e
    theta_m[columns] = linalg.cho_solve(factor, (truth.sigma @ truth.theta)[columns])
    return theta_m


def bias(truth: GroundTruth, m: Model) -> float:
    return population_loss(truth, project_theta(truth, m), truth.theta)


def closed_form_risk(truth: GroundTruth, m: Model, n: int) -> float:
    """E[l(theta_hat_m, theta)] = l(theta_m, theta) + [sigma^2 + l(theta_m, theta)] d_m / (n - d_m - 1)."""
    if n - m.dim - 1 < 1:
        raise DimensionTooLarge(f"Closed-form risk needs n - d_m - 1 >= 1, got n={n}, d_m={m.dim}.", model=m)
    model_bias = bias(truth, m)
    return model_bias + (truth.noise_var + model_bias) * m.dim / (n - m.dim - 1)


def stacked_biases(truth: GroundTruth, columns: np.ndarray) -> np.ndarray:
    """l(theta_m, theta) for a stack of same-dimension models, see `stacked_empirical_losses`."""
    count, d = columns.shape
    sigma_theta = truth.sigma @ truth.theta
    total = float(truth.theta @ sigma_theta)
    if d == 0:
        return np.full(count, total)

    blocks = truth.sigma[columns[:, :, None], columns[:, None, :]]
    rhs = sigma_theta[columns]
    try:
        beta = np.linalg.solve(blocks, rhs[:, :, None])[:, :, 0]
    except np.linalg.LinAlgError as e:
        raise SingularSubmatrix(f"Sigma restricted to some model of dimension {d} is singular.") from e
    return np.maximum(total - np.einsum("cd,cd->c", rhs, beta), 0.0)


def oracle_bound_term(truth: GroundTruth, m: Model, n: int, pen_value: float) -> float:
    """l(theta_m, theta) + (n - d_m)/n * pen(m) * [sigma^2 + l(theta_m, theta)], constants dropped."""
    model_bias = bias(truth, m)
    return model_bias + (n - m.dim) / n * pen_value * (truth.noise_var + model_bias)
