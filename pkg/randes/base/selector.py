import logging
from typing import List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict

from .collection import BaseCollection, ModelCollection
from .exceptions import EmptyCollection
from .penalty import BasePenalty, PenaltySpec, penalty_values
from .profile import residual_profile
from .regression import fit_least_squares
from .types import DataSet, Model

logger = logging.getLogger(__name__)

TIE_TOLERANCE = 1e-12


class SelectionResult(BaseModel):
    """Outcome of penalized model selection.

    `criterion_values` is aligned with the enumeration order of `collection`; `audit` pairs it with the models.
    """

    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    chosen: Model
    estimate: np.ndarray
    criterion_values: np.ndarray
    penalty_used: PenaltySpec
    collection: ModelCollection

    def audit(self) -> List[Tuple[Model, float]]:
        return list(zip(self.collection.enumerate(), self.criterion_values.tolist()))


def criterion(data: DataSet, m: Model, pen_value: float) -> float:
    """Crit(m) = ||Y - Pi_m Y||_n^2 (1 + pen(m))."""
    return fit_least_squares(data, m).empirical_loss * (1.0 + pen_value)


def argmin_position(values: np.ndarray) -> int:
    """First position whose value lies within 1e-12 of the minimum.

    Enumeration runs by dimension then lexicographically, so the first such position is the smallest tied model.
    """
    return int(np.argmax(values <= values.min() + TIE_TOLERANCE))


def select_from_profile(
    data: DataSet, c: BaseCollection, spec: BasePenalty, residuals: np.ndarray
) -> SelectionResult:
    """`select` with precomputed empirical losses, so several penalties can share one residual profile."""
    values = residuals * (1.0 + penalty_values(spec, c, data.n))
    chosen = c.model_at(argmin_position(values))
    logger.debug("Selected model {%s} among %d with %s", chosen, len(values), spec.kind)
    return SelectionResult(
        chosen=chosen,
        estimate=fit_least_squares(data, chosen).coefficients,
        criterion_values=values,
        penalty_used=spec,
        collection=c,
    )


def select(data: DataSet, c: BaseCollection, spec: BasePenalty) -> SelectionResult:
    """Minimize the penalized criterion over every model of `c`.

    Raises:
        EmptyCollection: if `c` has no model.
        DimensionTooLarge: naming the first model with d_m >= n.
    """
    if c.cardinality == 0:
        raise EmptyCollection("Cannot select from an empty collection.")
    return select_from_profile(data, c, spec, residual_profile(data, c))
