from .base import CompleteCollection, DataSet, GroundTruth, Model, OrderedCollection, select
from .simulation import SeedSpec, run_experiment

__all__ = (
    "CompleteCollection",
    "DataSet",
    "GroundTruth",
    "Model",
    "OrderedCollection",
    "SeedSpec",
    "run_experiment",
    "select",
)
