"""Monte-Carlo comparison of estimators: risk ratio, power and FDR with 95% confidence half-widths.

Replications are independent units keyed by (seed, rep) and may run on any joblib worker. Per-replication results
land in arrays indexed by replication and are reduced with `math.fsum`, so the report does not depend on the
number of workers or their scheduling.
"""
import logging
import math
from typing import Dict, List, Literal, Optional, Tuple, Union

import numpy as np
from joblib import Parallel, delayed
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing_extensions import Annotated

from ..base.collection import BaseCollection, CompleteCollection, ModelCollection, recommended_complete_dmax
from ..base.exceptions import LengthMismatch, NoTrueSignal, RandesError, ReplicationFailed
from ..base.penalty import BasePenalty, PenaltySpec, penalty_values
from ..base.profile import bias_profile, check_fits, residual_profile, risk_profile
from ..base.regression import population_loss
from ..base.selector import select_from_profile
from ..base.types import DataSet, GroundTruth, Model
from ..contrib.lasso.lasso import LassoConfig, adaptive_lasso_cv, lasso_cv
from .design import SeedSpec, generator_version, sample_dataset

logger = logging.getLogger(__name__)

Z_95 = 1.96
METRICS = ("risk_ratio", "power", "fdr")


class SelectorEstimator(BaseModel):
    """Penalized least squares over the experiment collection, or over its own `collection` when given."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["selector"] = "selector"
    name: str
    penalty: PenaltySpec
    collection: Optional[ModelCollection] = None


class LassoEstimator(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["lasso"] = "lasso"
    name: str = "lasso"
    config: LassoConfig = LassoConfig()


class AdaptiveLassoEstimator(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    kind: Literal["adaptive_lasso"] = "adaptive_lasso"
    name: str = "adaptive_lasso"
    config: LassoConfig = LassoConfig()


EstimatorSpec = Annotated[
    Union[SelectorEstimator, LassoEstimator, AdaptiveLassoEstimator],
    Field(discriminator="kind"),
]


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    truth: GroundTruth
    n: int = Field(ge=2)
    replications: int = Field(ge=1)
    estimators: List[EstimatorSpec] = Field(min_length=1)
    collection: ModelCollection
    oracle_collection: ModelCollection
    seed: SeedSpec

    @field_validator("estimators")
    def unique_names(cls, value):
        names = [estimator.name for estimator in value]
        if len(set(names)) != len(names):
            raise ValueError(f"Estimator names must be unique, got {names}.")
        return value

    @model_validator(mode="after")
    def fits_n_and_p(self):
        for c in [self.collection, self.oracle_collection] + [e.collection for e in self.selectors if e.collection]:
            check_fits(c, self.n, self.truth.p)
        if self.oracle_collection.max_dim > self.n - 2:
            raise ValueError(f"Oracle collection needs d_m <= n - 2 = {self.n - 2}.")
        for estimator in self.selectors:
            c = self.collection_of(estimator)
            if isinstance(c, CompleteCollection) and c.dmax > recommended_complete_dmax(self.n, c.p):
                logger.warning(
                    "%s: dmax=%d exceeds the recommended cap %d for n=%d, p=%d",
                    estimator.name,
                    c.dmax,
                    recommended_complete_dmax(self.n, c.p),
                    self.n,
                    c.p,
                )
            # Fails early when a penalty is undefined on this collection.
            penalty_values(estimator.penalty, c, self.n)
        return self

    @property
    def selectors(self) -> List[SelectorEstimator]:
        return [estimator for estimator in self.estimators if isinstance(estimator, SelectorEstimator)]

    def collection_of(self, estimator: SelectorEstimator) -> BaseCollection:
        return estimator.collection or self.collection


class Metric(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    value: float
    ci_half_width: float = Field(ge=0)


class EstimatorSummary(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    estimator: str
    n: int
    risk_ratio: Metric
    power: Metric
    fdr: Metric

    @model_validator(mode="after")
    def metrics_in_range(self):
        if self.risk_ratio.value < 0:
            raise ValueError("risk_ratio must be non-negative.")
        for name in ("power", "fdr"):
            if not 0.0 <= getattr(self, name).value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1].")
        return self


class ExperimentReport(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    estimators: List[EstimatorSummary]
    replications: int
    seed: int
    generator_version: str
    oracle_risk: float
    oracle_model: Model

    def summary(self, name: str) -> EstimatorSummary:
        for summary in self.estimators:
            if summary.estimator == name:
                return summary
        raise KeyError(name)


def power_and_fdr(theta_true: np.ndarray, theta_hat: np.ndarray) -> Tuple[float, float]:
    """Per-replication power and false discovery proportion.

    A coordinate is discovered when theta_hat is exactly nonzero. With no discovery the FDR contribution is 0.

    Raises:
        NoTrueSignal: if theta_true is identically zero.
    """
    theta_true = np.asarray(theta_true)
    theta_hat = np.asarray(theta_hat)
    if theta_true.shape != theta_hat.shape:
        raise LengthMismatch(f"theta_true has shape {theta_true.shape}, theta_hat {theta_hat.shape}.")

    signal = theta_true != 0
    discovered = theta_hat != 0
    if not signal.any():
        raise NoTrueSignal("Power is undefined when theta has no nonzero coordinate.")

    power = np.count_nonzero(signal & discovered) / np.count_nonzero(signal)
    discoveries = np.count_nonzero(discovered)
    fdr = np.count_nonzero(~signal & discovered) / discoveries if discoveries else 0.0
    return float(power), float(fdr)


def oracle_denominator(truth: GroundTruth, n: int, c: BaseCollection) -> float:
    """min over m in c of the closed-form risk E[l(theta_hat_m, theta)]."""
    return float(risk_profile(truth, c, n).min())


def oracle_model(truth: GroundTruth, n: int, c: BaseCollection) -> Model:
    return c.model_at(int(np.argmin(risk_profile(truth, c, n))))


def oracle_bound_minimum(truth: GroundTruth, n: int, c: BaseCollection, spec: BasePenalty) -> float:
    """min over m in c of l(theta_m, theta) + (n - d_m)/n pen(m) [sigma^2 + l(theta_m, theta)]."""
    biases = bias_profile(truth, c)
    dims = c.dimensions()
    return float(np.min(biases + (n - dims) / n * penalty_values(spec, c, n) * (truth.noise_var + biases)))


def _estimate(estimator: EstimatorSpec, data: DataSet, cfg: ExperimentConfig, profiles: Dict[int, np.ndarray]):
    if isinstance(estimator, SelectorEstimator):
        c = cfg.collection_of(estimator)
        if id(c) not in profiles:
            profiles[id(c)] = residual_profile(data, c)
        return select_from_profile(data, c, estimator.penalty, profiles[id(c)]).estimate
    if isinstance(estimator, LassoEstimator):
        return lasso_cv(data, estimator.config)[0]
    return adaptive_lasso_cv(data, estimator.config)[0]


def run_replication(cfg: ExperimentConfig, rep: int) -> np.ndarray:
    """Loss, power and FDR contribution of every estimator, shape (estimators, 3)."""
    data = sample_dataset(cfg.truth, cfg.n, cfg.seed, rep)
    # Selectors over the same collection share one residual profile.
    profiles: Dict[int, np.ndarray] = {}
    results = np.empty((len(cfg.estimators), 3))
    for e, estimator in enumerate(cfg.estimators):
        try:
            theta_hat = _estimate(estimator, data, cfg, profiles)
        except (RandesError, np.linalg.LinAlgError) as error:
            raise ReplicationFailed(rep, estimator.name, error) from error
        results[e, 0] = population_loss(cfg.truth, theta_hat, cfg.truth.theta)
        results[e, 1:] = power_and_fdr(cfg.truth.theta, theta_hat)
    logger.debug("Replication %d done", rep)
    return results


def mean_and_half_width(values: np.ndarray) -> Tuple[float, float]:
    """Mean and 1.96 standard errors, both through compensated summation."""
    count = len(values)
    mean = math.fsum(values) / count
    if count < 2:
        return mean, 0.0
    variance = math.fsum((value - mean) ** 2 for value in values) / (count - 1)
    return mean, Z_95 * math.sqrt(variance / count)


def _ratio(value: float, denominator: float) -> float:
    if denominator > 0:
        return value / denominator
    return 0.0 if value == 0 else math.inf


def summarize(cfg: ExperimentConfig, results: np.ndarray, oracle_risk: float) -> List[EstimatorSummary]:
    """Reduce stacked replication results, shape (replications, estimators, 3)."""
    summaries = []
    for e, estimator in enumerate(cfg.estimators):
        loss, loss_half = mean_and_half_width(results[:, e, 0])
        power, power_half = mean_and_half_width(results[:, e, 1])
        fdr, fdr_half = mean_and_half_width(results[:, e, 2])
        summaries.append(
            EstimatorSummary(
                estimator=estimator.name,
                n=cfg.n,
                risk_ratio=Metric(value=_ratio(loss, oracle_risk), ci_half_width=_ratio(loss_half, oracle_risk)),
                power=Metric(value=power, ci_half_width=power_half),
                fdr=Metric(value=fdr, ci_half_width=fdr_half),
            )
        )
    return summaries


def run_experiment(cfg: ExperimentConfig, n_jobs: int = 1, backend: Optional[str] = None) -> ExperimentReport:
    """Run every replication and report per-estimator metrics.

    Raises:
        NoTrueSignal: if theta is identically zero.
        ReplicationFailed: on the first estimator error, naming the replication. Nothing is silently dropped.
    """
    if not np.any(cfg.truth.theta):
        raise NoTrueSignal("Experiments need a theta with at least one nonzero coordinate.")

    oracle_risk = oracle_denominator(cfg.truth, cfg.n, cfg.oracle_collection)
    logger.info(
        "Starting %d replications at n=%d with seed %d (%s)",
        cfg.replications,
        cfg.n,
        cfg.seed.master_seed,
        generator_version(),
    )
    results = Parallel(n_jobs=n_jobs, backend=backend)(
        delayed(run_replication)(cfg, rep) for rep in range(cfg.replications)
    )
    report = ExperimentReport(
        estimators=summarize(cfg, np.stack(results), oracle_risk),
        replications=cfg.replications,
        seed=cfg.seed.master_seed,
        generator_version=generator_version(),
        oracle_risk=oracle_risk,
        oracle_model=oracle_model(cfg.truth, cfg.n, cfg.oracle_collection),
    )
    logger.info("Finished %d replications at n=%d", cfg.replications, cfg.n)
    return report
