"""Lasso and adaptive Lasso by cyclic coordinate descent, tuned by leave-one-out cross-validation.

The objective is ||Y - X theta||_n^2 + (2 lambda / sqrt(n)) sum_j w_j |theta_j| with every column rescaled to unit
empirical norm. The solver works on a batch of independent problems at once (one per candidate and fold), which is
how `loo_cv` evaluates a whole grid in a single pass.
"""
import logging
import math
from typing import Any, Callable, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from ...base.exceptions import AllWeightsInfinite, DegenerateY, NoConvergence, NoValidCandidate, RandesError
from ...base.types import DataSet

logger = logging.getLogger(__name__)

ZERO_INIT = 1e-10
CV_TIE_TOLERANCE = 1e-12


class LassoConfig(BaseModel):
    """Coordinate-descent and grid settings.

    `lambda_grid=None` means the log-spaced grid of `default_lambda_grid`, recomputed from each data set.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    lambda_grid: Optional[Tuple[float, ...]] = None
    n_points: int = Field(20, ge=1)
    gamma_grid: Tuple[float, ...] = (0.5, 1.0, 2.0)
    max_iter: int = Field(10_000, ge=1)
    tol: float = Field(1e-7, gt=0)

    @field_validator("lambda_grid", "gamma_grid", mode="before")
    def split_str(cls, value):
        if isinstance(value, str):
            return tuple(float(item) for item in value.split(","))
        return value

    @field_validator("lambda_grid")
    def increasing_lambdas(cls, value):
        if value is None:
            return value
        if not value or any(lam <= 0 for lam in value):
            raise ValueError("lambda_grid must be a nonempty list of positive values.")
        if any(a >= b for a, b in zip(value, value[1:])):
            raise ValueError("lambda_grid must be strictly increasing.")
        return value

    @field_validator("gamma_grid")
    def positive_gammas(cls, value):
        if not value or any(gamma <= 0 for gamma in value):
            raise ValueError("gamma_grid must be a nonempty list of positive values.")
        return value

    def lambdas(self, data: DataSet) -> np.ndarray:
        if self.lambda_grid is not None:
            return np.asarray(self.lambda_grid)
        return default_lambda_grid(data, self.n_points)


DEFAULT_CONFIG = LassoConfig()


class _Batch(BaseModel):
    """Standardized problems sharing one column count.

    Shapes: z (F, m, p), y (F, m), scale (F, p) where F indexes folds and m is the number of rows per fold.
    """

    model_config = ConfigDict(arbitrary_types_allowed=True)

    z: np.ndarray
    y: np.ndarray
    scale: np.ndarray
    degenerate: np.ndarray

    @classmethod
    def from_arrays(cls, x: np.ndarray, y: np.ndarray) -> "_Batch":
        scale = np.sqrt(np.mean(x**2, axis=-2))
        degenerate = scale <= 0
        scale = np.where(degenerate, 1.0, scale)
        return cls(z=x / scale[..., None, :], y=y, scale=scale, degenerate=degenerate)

    @property
    def rows(self) -> int:
        return self.z.shape[-2]

    def thresholds(self, lambdas: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """lambda w_j / sqrt(m) for every candidate, fold and coordinate: shape (C, F, p).

        Args:
            lambdas: shape (C,).
            weights: shape (C, p), or (C, F, p) for per-fold weights, infinite where a coordinate is excluded.
        """
        if weights.ndim == 2:
            weights = weights[:, None, :]
        thresholds = lambdas[:, None, None] * weights / math.sqrt(self.rows)
        return np.where(self.degenerate[None], np.inf, thresholds)


def _soft_threshold(value: np.ndarray, threshold: np.ndarray) -> np.ndarray:
    return np.sign(value) * np.maximum(np.abs(value) - threshold, 0.0)


def _objective(residual: np.ndarray, beta: np.ndarray, thresholds: np.ndarray) -> np.ndarray:
    penalty = (np.abs(beta) * np.where(beta != 0, thresholds, 0.0)).sum(axis=-1)
    return np.mean(residual**2, axis=-1) + 2.0 * penalty


def coordinate_descent(
    batch: _Batch, thresholds: np.ndarray, tol: float, max_iter: int, trace: bool = False
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, List[np.ndarray]]:
    """Cyclic coordinate descent on every problem of the batch, in lockstep.

    Returns:
        beta: standardized coefficients, shape (C, F, p).
        converged: boolean mask, shape (C, F).
        change: largest coordinate change of the last sweep, shape (C, F).
        objectives: one (C, F) array per sweep when `trace` is set.
    """
    m, p = batch.z.shape[-2:]
    beta = np.zeros(thresholds.shape)
    residual = np.broadcast_to(batch.y, thresholds.shape[:-1] + (m,)).copy()
    change = np.full(thresholds.shape[:-1], np.inf)
    objectives = []

    for sweep in range(1, max_iter + 1):
        change = np.zeros(thresholds.shape[:-1])
        for j in range(p):
            column = batch.z[..., j]
            old = beta[..., j]
            new = _soft_threshold((residual * column).sum(axis=-1) / m + old, thresholds[..., j])
            delta = new - old
            residual -= delta[..., None] * column
            beta[..., j] = new
            np.maximum(change, np.abs(delta), out=change)

        if trace:
            objectives.append(_objective(residual, beta, thresholds))
        if change.max(initial=0.0) < tol:
            logger.debug("Coordinate descent converged after %d sweeps", sweep)
            break

    return beta, change < tol, change, objectives


def _weights(p: int, weights: Optional[np.ndarray]) -> np.ndarray:
    if weights is None:
        return np.ones(p)
    return np.asarray(weights, dtype=float)


def _solve_single(data: DataSet, lam: float, weights: np.ndarray, config: LassoConfig) -> np.ndarray:
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam}.")
    batch = _Batch.from_arrays(data.x[None], data.y[None])
    thresholds = batch.thresholds(np.array([lam]), weights[None])
    beta, converged, change, _ = coordinate_descent(batch, thresholds, config.tol, config.max_iter)
    theta = beta[0, 0] / batch.scale[0]
    if not converged.all():
        raise NoConvergence(
            f"Coordinate descent did not converge in {config.max_iter} sweeps (lambda={lam}).",
            last_iterate=theta,
            last_change=float(change.max()),
        )
    return theta


def lasso(data: DataSet, lam: float, config: LassoConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Lasso estimate on the original scale of the covariates.

    Raises:
        NoConvergence: after `config.max_iter` sweeps, carrying the last iterate.
    """
    return _solve_single(data, lam, np.ones(data.p), config)


def adaptive_weights(data: DataSet, init: np.ndarray, gamma: float) -> np.ndarray:
    """w_j = 1 / |init_j|^gamma on the standardized scale, infinite where |init_j| < 1e-10.

    Raises:
        AllWeightsInfinite: if every coordinate of `init` vanishes.
    """
    init = _checked_init(init, data.p)
    return _scaled_weights(init, np.sqrt(np.mean(data.x**2, axis=0)), gamma)


def _checked_init(init: np.ndarray, p: int) -> np.ndarray:
    init = np.asarray(init, dtype=float)
    if init.shape != (p,):
        raise ValueError(f"init has shape {init.shape}, expected ({p},).")
    if (np.abs(init) < ZERO_INIT).all():
        raise AllWeightsInfinite("The initial estimate is zero, every adaptive weight is infinite.")
    return init


def _scaled_weights(init: np.ndarray, scale: np.ndarray, gamma: float) -> np.ndarray:
    """Weights for column scales of any leading shape, e.g. (F, p) for one scale per fold."""
    with np.errstate(divide="ignore"):
        weights = 1.0 / np.abs(init * scale) ** gamma
    return np.where(np.abs(init) < ZERO_INIT, np.inf, weights)


def adaptive_lasso(
    data: DataSet, lam: float, gamma: float, init: np.ndarray, config: LassoConfig = DEFAULT_CONFIG
) -> np.ndarray:
    return _solve_single(data, lam, adaptive_weights(data, init, gamma), config)


def lambda_max(data: DataSet, weights: Optional[np.ndarray] = None) -> float:
    """Smallest lambda at which the solution is identically zero."""
    weights = _weights(data.p, weights)
    batch = _Batch.from_arrays(data.x, data.y)
    correlations = np.abs(batch.z.T @ batch.y) / data.n
    with np.errstate(divide="ignore", invalid="ignore"):
        ratios = np.where(np.isinf(weights) | batch.degenerate, 0.0, correlations / weights)
    return math.sqrt(data.n) * float(ratios.max())


def objective_trace(
    data: DataSet, lam: float, weights: Optional[np.ndarray] = None, config: LassoConfig = DEFAULT_CONFIG
) -> np.ndarray:
    """Objective value after each coordinate-descent sweep."""
    batch = _Batch.from_arrays(data.x[None], data.y[None])
    thresholds = batch.thresholds(np.array([lam]), _weights(data.p, weights)[None])
    _, _, _, objectives = coordinate_descent(batch, thresholds, config.tol, config.max_iter, trace=True)
    return np.array([objective[0, 0] for objective in objectives])


def kkt_violation(data: DataSet, theta: np.ndarray, lam: float, weights: Optional[np.ndarray] = None) -> float:
    """Largest violation of the optimality conditions, on the standardized scale.

    Active coordinates need z_j'(y - Z beta)/n = t_j sign(beta_j), inactive ones |z_j'(y - Z beta)/n| <= t_j.
    """
    weights = _weights(data.p, weights)
    batch = _Batch.from_arrays(data.x, data.y)
    beta = np.asarray(theta, dtype=float) * batch.scale
    gradient = batch.z.T @ (batch.y - batch.z @ beta) / data.n
    thresholds = lam * weights / math.sqrt(data.n)

    active = beta != 0
    violation = np.where(
        active,
        np.abs(gradient - np.where(active, thresholds, 0.0) * np.sign(beta)),
        np.maximum(np.abs(gradient) - thresholds, 0.0),
    )
    return float(violation.max())


def default_lambda_grid(data: DataSet, n_points: int = 20) -> np.ndarray:
    """`n_points` log-spaced values on [0.3 L, L] with L = 2 sqrt(log(p) Var(Y)).

    A single point grid is the upper endpoint.

    Raises:
        DegenerateY: if the unbiased empirical variance of Y is not positive.
    """
    if data.p < 2 or data.n < 2:
        raise ValueError(f"The lambda grid needs p >= 2 and n >= 2, got p={data.p}, n={data.n}.")
    variance = float(np.var(data.y, ddof=1))
    if not variance > 0:
        raise DegenerateY(f"Empirical variance of Y is {variance}.")
    upper = 2.0 * math.sqrt(math.log(data.p) * variance)
    if n_points == 1:
        return np.array([upper])
    return np.geomspace(0.3 * upper, upper, n_points)


def _fold_arrays(data: DataSet) -> Tuple[np.ndarray, np.ndarray]:
    keep = ~np.eye(data.n, dtype=bool)
    x_folds = np.stack([data.x[row] for row in keep])
    y_folds = np.stack([data.y[row] for row in keep])
    return x_folds, y_folds


def _batched_fold_errors(data: DataSet, lambdas: np.ndarray, weights: np.ndarray, config: LassoConfig) -> np.ndarray:
    """Held-out squared errors, shape (C, n); a candidate that fails to converge on any fold gets NaN."""
    batch = _Batch.from_arrays(*_fold_arrays(data))
    thresholds = batch.thresholds(lambdas, weights)
    beta, converged, _, _ = coordinate_descent(batch, thresholds, config.tol, config.max_iter)
    theta = beta / batch.scale[None]
    errors = (data.y[None] - np.einsum("cfp,fp->cf", theta, data.x)) ** 2
    errors[~converged.all(axis=1)] = np.nan
    return errors


class LassoFitter(BaseModel):
    """Fits `lasso(data, lambda)`; candidates are 1-tuples (lambda,)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    config: LassoConfig = DEFAULT_CONFIG

    def __call__(self, data: DataSet, lam: float) -> np.ndarray:
        return lasso(data, lam, self.config)

    def fold_errors(self, data: DataSet, candidates: Sequence[Tuple[float, ...]]) -> np.ndarray:
        lambdas = np.array([candidate[0] for candidate in candidates])
        weights = np.ones((len(candidates), data.p))
        return _batched_fold_errors(data, lambdas, weights, self.config)


class AdaptiveLassoFitter(BaseModel):
    """Fits `adaptive_lasso(data, lambda, gamma, init)` with `init` held fixed across folds."""

    model_config = ConfigDict(extra="forbid", frozen=True, arbitrary_types_allowed=True)

    init: np.ndarray
    config: LassoConfig = DEFAULT_CONFIG

    def __call__(self, data: DataSet, lam: float, gamma: float) -> np.ndarray:
        return adaptive_lasso(data, lam, gamma, self.init, self.config)

    def fold_errors(self, data: DataSet, candidates: Sequence[Tuple[float, ...]]) -> np.ndarray:
        lambdas = np.array([lam for lam, _ in candidates])
        init = _checked_init(self.init, data.p)
        # Weights use each fold's own column scales.
        x_folds, _ = _fold_arrays(data)
        scale = np.sqrt(np.mean(x_folds**2, axis=-2))
        weights = np.stack([_scaled_weights(init, scale, gamma) for _, gamma in candidates])
        return _batched_fold_errors(data, lambdas, weights, self.config)


def _sequential_fold_errors(data: DataSet, candidates: Sequence[Tuple[float, ...]], fitter: Callable) -> np.ndarray:
    errors = np.full((len(candidates), data.n), np.nan)
    for c, candidate in enumerate(candidates):
        try:
            for i in range(data.n):
                theta = fitter(data.without_row(i), *candidate)
                errors[c, i] = (data.y[i] - data.x[i] @ theta) ** 2
        except (RandesError, np.linalg.LinAlgError) as e:
            logger.warning("Candidate %s disqualified on fold %d: %s", candidate, i, e)
            errors[c] = np.nan
    return errors


def loo_cv(data: DataSet, candidates: Sequence[Tuple[Any, ...]], fitter: Callable) -> Tuple[Any, ...]:
    """Candidate with the smallest leave-one-out squared error.

    Fitters exposing `fold_errors` evaluate all candidates and folds at once; any other callable
    `fitter(data, *candidate)` is run fold by fold. Ties go to the smallest candidate tuple, that is the smallest
    lambda, then the smallest gamma.

    Raises:
        NoValidCandidate: when every candidate fails on some fold.
    """
    if data.n < 2:
        raise ValueError(f"Leave-one-out needs n >= 2, got n={data.n}.")
    candidates = [tuple(candidate) for candidate in candidates]
    if not candidates:
        raise ValueError("No candidate to cross-validate.")

    if hasattr(fitter, "fold_errors"):
        errors = fitter.fold_errors(data, candidates)
    else:
        errors = _sequential_fold_errors(data, candidates, fitter)

    scores = errors.sum(axis=1)
    valid = ~np.isnan(scores)
    for candidate in np.asarray(candidates, dtype=object)[~valid]:
        logger.warning("Candidate %s disqualified: fitter failed on at least one fold", tuple(candidate))
    if not valid.any():
        raise NoValidCandidate(f"All {len(candidates)} candidates failed leave-one-out cross-validation.")

    best = np.min(scores[valid])
    tied = [candidates[c] for c in np.flatnonzero(valid & (scores <= best + CV_TIE_TOLERANCE * max(1.0, best)))]
    return min(tied)


def lasso_cv(data: DataSet, config: LassoConfig = DEFAULT_CONFIG) -> Tuple[np.ndarray, float]:
    """Lasso at the leave-one-out selected lambda. Returns (estimate, lambda)."""
    (lam,) = loo_cv(data, [(lam,) for lam in config.lambdas(data)], LassoFitter(config=config))
    logger.debug("Lasso lambda selected by leave-one-out: %g", lam)
    return lasso(data, lam, config), lam


def adaptive_lasso_cv(data: DataSet, config: LassoConfig = DEFAULT_CONFIG) -> Tuple[np.ndarray, float, float]:
    """Adaptive Lasso started from the cross-validated Lasso. Returns (estimate, lambda, gamma)."""
    init, _ = lasso_cv(data, config)
    lambdas = config.lambdas(data)
    candidates = [(lam, gamma) for lam in lambdas for gamma in config.gamma_grid]
    lam, gamma = loo_cv(data, candidates, AdaptiveLassoFitter(init=init, config=config))
    logger.debug("Adaptive Lasso selected lambda=%g, gamma=%g", lam, gamma)
    return adaptive_lasso(data, lam, gamma, init, config), lam, gamma
