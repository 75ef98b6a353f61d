"""Penalty functions pen(m) and the assumption checkers attached to them.

Penalties depend on a model only through its dimension d_m, plus H(d_m) or l_m for the complexity and prior kinds,
so every function here takes scalars.
"""
import math
from typing import Literal, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from typing_extensions import Annotated

from .collection import BaseCollection, ExplicitCollection, complexity_h, prior_l
from .exceptions import DimensionTooLarge, InvalidK
from .types import Model


def _check_dimension(d: int, n: int, limit: int) -> None:
    if d < 0:
        raise ValueError(f"Dimension must be non-negative, got {d}.")
    if d > limit:
        raise DimensionTooLarge(f"Penalty undefined for d={d} with n={n}.")


def pen_minimal(K: float, d: int, n: int) -> float:
    """K d / (n - d). K=2 is the FPE criterion."""
    _check_dimension(d, n, n - 1)
    return K * d / (n - d)


def pen_heuristic(d: int, n: int) -> float:
    """d / (n - d) (2 + (d + 1) / (n - d - 1)), the unbiased risk estimate penalty."""
    _check_dimension(d, n, n - 2)
    return d / (n - d) * (2.0 + (d + 1) / (n - d - 1))


def pen_complexity(K: float, d: int, n: int, h: float) -> float:
    """K d / (n - d) (1 + sqrt(2 h))^2 for a collection of complexity H(d) = h."""
    if h < 0:
        raise ValueError(f"Complexity must be non-negative, got {h}.")
    return pen_minimal(K, d, n) * (1.0 + math.sqrt(2.0 * h)) ** 2


def pen_complete(K: float, d: int, n: int, p: int) -> float:
    """K d / (n - d) (1 + sqrt(2 log(e p / d)))^2, complete variable selection."""
    _check_dimension(d, n, n - 1)
    if d == 0:
        return 0.0
    if d > p:
        raise DimensionTooLarge(f"Penalty undefined for d={d} > p={p}.")
    return pen_minimal(K, d, n) * (1.0 + math.sqrt(2.0 * (1.0 + math.log(p / d)))) ** 2


def pen_prior(K: float, d: int, n: int, l_m: float) -> float:
    """K d / (n - d) (1 + sqrt(2 l_m))^2, l_m derived from prior weights."""
    _check_dimension(d, n, n - 1)
    if d == 0:
        return 0.0
    if l_m < 0:
        raise ValueError(f"l_m must be non-negative, got {l_m}.")
    return pen_minimal(K, d, n) * (1.0 + math.sqrt(2.0 * l_m)) ** 2


def eta_of_k(K: float) -> float:
    """Largest admissible eta for a given K.

    Each bracketed base is clamped at zero before squaring, so eta(1+) = 0 and eta increases to 1.

    Raises:
        InvalidK: if K <= 1.
    """
    if not K > 1:
        raise InvalidK(f"eta(K) requires K > 1, got {K}.")
    root = (3.0 / (K + 2.0)) ** (1.0 / 6.0)
    return max(max(0.0, 1.0 - 2.0 * root) ** 2, max(0.0, 1.0 - root) ** 2 / 4.0)


class BasePenalty(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    def at_dimension(self, c: BaseCollection, d: int, n: int) -> float:  # pragma: no cover
        ...

    def values(self, c: BaseCollection, n: int) -> np.ndarray:
        """pen(m) for every model of `c`, in enumeration order."""
        dims = c.dimensions()
        table = np.array([self.at_dimension(c, d, n) if c.count_at(d) else 0.0 for d in range(c.max_dim + 1)])
        return table[dims]

    def value(self, c: BaseCollection, m: Model, n: int) -> float:
        return self.at_dimension(c, m.dim, n)


class MinimalPenalty(BasePenalty):
    """K d_m / (n - d_m). Any K > 0 is accepted so that under-penalization can be studied."""

    kind: Literal["minimal"] = "minimal"
    K: float = Field(gt=0)

    def at_dimension(self, c: BaseCollection, d: int, n: int) -> float:
        return pen_minimal(self.K, d, n)


class HeuristicPenalty(BasePenalty):
    kind: Literal["heuristic"] = "heuristic"

    def at_dimension(self, c: BaseCollection, d: int, n: int) -> float:
        return pen_heuristic(d, n)


class ComplexityPenalty(BasePenalty):
    """Penalty driven by the collection complexity H(d)."""

    kind: Literal["complexity"] = "complexity"
    K: float = Field(gt=0)

    def at_dimension(self, c: BaseCollection, d: int, n: int) -> float:
        return pen_complexity(self.K, d, n, complexity_h(c, d) if d else 0.0)


class CompletePenalty(BasePenalty):
    kind: Literal["complete"] = "complete"
    K: float = Field(gt=0)

    def at_dimension(self, c: BaseCollection, d: int, n: int) -> float:
        return pen_complete(self.K, d, n, c.p)


class PriorPenalty(BasePenalty):
    """Penalty driven by l_m = -log(pi(m)) / d_m. Needs an explicit collection with prior weights."""

    kind: Literal["prior"] = "prior"
    K: float = Field(gt=0)

    @staticmethod
    def _explicit(c: BaseCollection) -> ExplicitCollection:
        if not isinstance(c, ExplicitCollection) or c.priors is None:
            raise ValueError("The prior penalty needs an explicit collection with prior weights.")
        return c

    def values(self, c: BaseCollection, n: int) -> np.ndarray:
        c = self._explicit(c)
        return np.array([self.value(c, m, n) for m in c.enumerate()])

    def value(self, c: BaseCollection, m: Model, n: int) -> float:
        return pen_prior(self.K, m.dim, n, prior_l(self._explicit(c), m))


PenaltySpec = Annotated[
    Union[MinimalPenalty, HeuristicPenalty, ComplexityPenalty, CompletePenalty, PriorPenalty],
    Field(discriminator="kind"),
]


def penalty_values(spec: BasePenalty, c: BaseCollection, n: int) -> np.ndarray:
    return spec.values(c, n)


def penalty_value(spec: BasePenalty, c: BaseCollection, m: Model, n: int) -> float:
    return spec.value(c, m, n)


class AssumptionCheck(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    ok: bool
    diagnostic: str = ""

    def __bool__(self) -> bool:
        return self.ok


def _shape(d: int, n: int, complexity: float) -> float:
    """(1 + sqrt(2 complexity))^2 d / (n - d), infinite when d >= n."""
    if d >= n:
        return math.inf
    return (1.0 + math.sqrt(2.0 * complexity)) ** 2 * d / (n - d)


def check_assumption(c: BaseCollection, K: float, n: int, eta: float) -> AssumptionCheck:
    """Check (1 + sqrt(2 H(d_m)))^2 d_m / (n - d_m) <= eta < eta(K) over the whole collection.

    Prior collections use l_m in place of H(d_m). Violations are reported in the diagnostic, never raised.
    """
    if not eta > 0:
        raise ValueError(f"eta must be positive, got {eta}.")

    try:
        eta_k = eta_of_k(K)
    except InvalidK as e:
        return AssumptionCheck(ok=False, diagnostic=str(e))

    if isinstance(c, ExplicitCollection) and c.priors is not None:
        for m in c.enumerate():
            if m.dim and _shape(m.dim, n, prior_l(c, m)) > eta:
                return AssumptionCheck(ok=False, diagnostic=f"Model {{{m}}} violates the bound with eta={eta}.")
    else:
        for d in range(1, c.max_dim + 1):
            if c.count_at(d) and _shape(d, n, complexity_h(c, d)) > eta:
                m = c.first_at(d)
                return AssumptionCheck(ok=False, diagnostic=f"Model {{{m}}} violates the bound with eta={eta}.")

    if not eta < eta_k:
        return AssumptionCheck(ok=False, diagnostic=f"eta={eta} is not below eta(K)={eta_k:.6g} for K={K}.")
    return AssumptionCheck(ok=True)


def check_polynomial(c: BaseCollection, alpha: float, beta: float) -> AssumptionCheck:
    """Card{m : d_m = d} <= alpha d^beta for every d >= 1."""
    for d in range(1, c.max_dim + 1):
        count = c.count_at(d)
        if count > alpha * d**beta:
            return AssumptionCheck(ok=False, diagnostic=f"{count} models of dimension {d} exceed {alpha} * {d}^{beta}.")
    return AssumptionCheck(ok=True)


def check_eta_dimension(c: BaseCollection, n: int, eta: float) -> AssumptionCheck:
    """Every d_m <= eta n and n > 6 / (1 - eta)."""
    if not 0 < eta < 1:
        return AssumptionCheck(ok=False, diagnostic=f"eta must lie in (0, 1), got {eta}.")
    if not n > 6.0 / (1.0 - eta):
        return AssumptionCheck(ok=False, diagnostic=f"n={n} is not above 6 / (1 - eta) = {6.0 / (1.0 - eta):.6g}.")
    if c.cardinality and c.max_dim > eta * n:
        m = c.first_at(c.max_dim)
        return AssumptionCheck(ok=False, diagnostic=f"Model {{{m}}} has dimension {c.max_dim} > eta n = {eta * n:.6g}.")
    return AssumptionCheck(ok=True)


def complete_dimension_condition(n: int, p: int, d: int, eta: float) -> bool:
    """d <= eta n / (1 + [1 + sqrt(2 (1 + log(p / d)))]^2)."""
    if d < 1:
        return True
    return d <= eta * n / (1.0 + (1.0 + math.sqrt(2.0 * (1.0 + math.log(p / d)))) ** 2)


def largest_admissible_dmax(n: int, p: int, eta: float) -> int:
    """Largest d <= p meeting `complete_dimension_condition`, 0 when none does."""
    best = 0
    for d in range(1, p + 1):
        if complete_dimension_condition(n, p, d, eta):
            best = d
    return best
