from .collection import (
    CompleteCollection,
    ExplicitCollection,
    ModelCollection,
    OrderedCollection,
    complexity_h,
    enumerate_models,
    load_explicit_collection,
    prior_l,
    recommended_complete_dmax,
)
from .penalty import (
    AssumptionCheck,
    ComplexityPenalty,
    CompletePenalty,
    HeuristicPenalty,
    MinimalPenalty,
    PenaltySpec,
    PriorPenalty,
    check_assumption,
    eta_of_k,
    penalty_value,
    penalty_values,
)
from .regression import closed_form_risk, empirical_loss, fit_least_squares, population_loss, project_theta
from .selector import SelectionResult, criterion, select
from .types import DataSet, FitResult, GroundTruth, Model

__all__ = (
    "AssumptionCheck",
    "CompleteCollection",
    "CompletePenalty",
    "ComplexityPenalty",
    "DataSet",
    "ExplicitCollection",
    "FitResult",
    "GroundTruth",
    "HeuristicPenalty",
    "MinimalPenalty",
    "Model",
    "ModelCollection",
    "OrderedCollection",
    "PenaltySpec",
    "PriorPenalty",
    "SelectionResult",
    "check_assumption",
    "closed_form_risk",
    "complexity_h",
    "criterion",
    "empirical_loss",
    "enumerate_models",
    "eta_of_k",
    "fit_least_squares",
    "load_explicit_collection",
    "penalty_value",
    "penalty_values",
    "population_loss",
    "prior_l",
    "project_theta",
    "recommended_complete_dmax",
    "select",
)
