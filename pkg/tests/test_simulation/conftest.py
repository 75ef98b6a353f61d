import numpy as np
import pytest

from randes.base.collection import CompleteCollection
from randes.base.types import GroundTruth
from randes.contrib.lasso.lasso import LassoConfig
from randes.simulation.design import SeedSpec
from randes.simulation.experiment import ExperimentConfig, LassoEstimator, SelectorEstimator


@pytest.fixture(scope="package")
def small_truth():
    return GroundTruth(theta=[2.0, 1.0, 0.5, 0.0, 0.0, 0.0], sigma=np.eye(6), noise_var=1.0)


@pytest.fixture(scope="package")
def small_experiment(small_truth):
    return ExperimentConfig(
        truth=small_truth,
        n=20,
        replications=12,
        estimators=[
            SelectorEstimator(name="K=1.1", penalty={"kind": "complete", "K": 1.1}),
            SelectorEstimator(name="fpe", penalty={"kind": "minimal", "K": 2.0}),
            LassoEstimator(config=LassoConfig(n_points=5)),
        ],
        collection=CompleteCollection(p=6, dmax=3),
        oracle_collection=CompleteCollection(p=6, dmax=3),
        seed=SeedSpec(master_seed=2024),
    )
