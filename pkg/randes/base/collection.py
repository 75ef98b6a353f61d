import itertools
import math
from collections import Counter
from pathlib import Path
from typing import Dict, Iterator, Literal, Optional, Tuple, Union
from warnings import warn

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, PrivateAttr, ValidationInfo, field_validator, model_validator
from typing_extensions import Annotated

from .exceptions import ConfigError, ModelNotInCollection
from .types import Model

CHUNK_SIZE = 4096
PRIOR_SUM_TOLERANCE = 1e-10
PRIOR_RENORMALIZE_TOLERANCE = 1e-6


class BaseCollection(BaseModel):
    """Abstract model collection.

    Every collection enumerates its models in the same deterministic order: by dimension ascending, then
    lexicographically on the index list. Selection tie-breaking relies on that order.

    # Vectorized access

    `blocks` yields the same models, in the same order, as integer arrays of 0-based columns grouped by dimension,
    at most `chunk_size` models at a time:

        >>> for d, columns in CompleteCollection(p=20, dmax=5).blocks():
        ...     columns.shape  # (count, d)
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    p: int = Field(ge=1)

    def enumerate(self) -> Iterator[Model]:  # pragma: no cover
        ...

    def blocks(self, chunk_size: int = CHUNK_SIZE) -> Iterator[Tuple[int, np.ndarray]]:  # pragma: no cover
        ...

    def count_at(self, d: int) -> int:  # pragma: no cover
        ...

    @property
    def max_dim(self) -> int:  # pragma: no cover
        ...

    @property
    def cardinality(self) -> int:
        return sum(self.count_at(d) for d in range(self.max_dim + 1))

    def contains(self, m: Model) -> bool:
        return any(candidate == m for candidate in self.enumerate())

    def dimensions(self) -> np.ndarray:
        """d_m of every model, in enumeration order."""
        counts = [self.count_at(d) for d in range(self.max_dim + 1)]
        return np.repeat(np.arange(self.max_dim + 1), counts)

    def model_at(self, position: int) -> Model:
        """The model at `position` in enumeration order."""
        offset = 0
        for _, columns in self.blocks():
            if position < offset + len(columns):
                return Model.from_columns(columns[position - offset])
            offset += len(columns)
        raise IndexError(f"Position {position} is outside a collection of {offset} models.")

    def first_at(self, d: int) -> Optional[Model]:
        """The first model of dimension `d`, if any."""
        for dim, columns in self.blocks():
            if dim == d:
                return Model.from_columns(columns[0])
        return None


class OrderedCollection(BaseCollection):
    """The nested collection {m_0, m_1, ..., m_i} with m_0 empty and m_k = {1, ..., k}."""

    kind: Literal["ordered"] = "ordered"
    dmax: int = Field(ge=0)

    @model_validator(mode="after")
    def dmax_within_p(self):
        if self.dmax > self.p:
            raise ValueError(f"dmax={self.dmax} exceeds p={self.p}.")
        return self

    @property
    def max_dim(self) -> int:
        return self.dmax

    def enumerate(self) -> Iterator[Model]:
        for d in range(self.dmax + 1):
            yield Model(indices=tuple(range(1, d + 1)))

    def blocks(self, chunk_size: int = CHUNK_SIZE) -> Iterator[Tuple[int, np.ndarray]]:
        for d in range(self.dmax + 1):
            yield d, np.arange(d, dtype=np.intp).reshape(1, d)

    def count_at(self, d: int) -> int:
        return 1 if 0 <= d <= self.dmax else 0

    def contains(self, m: Model) -> bool:
        return m.dim <= self.dmax and m.indices == tuple(range(1, m.dim + 1))


class CompleteCollection(BaseCollection):
    """Every subset of {1, ..., p} of size at most `dmax`, streamed rather than materialized."""

    kind: Literal["complete"] = "complete"
    dmax: int = Field(ge=0)

    @model_validator(mode="after")
    def dmax_within_p(self):
        if self.dmax > self.p:
            raise ValueError(f"dmax={self.dmax} exceeds p={self.p}.")
        return self

    @property
    def max_dim(self) -> int:
        return self.dmax

    def enumerate(self) -> Iterator[Model]:
        for d in range(self.dmax + 1):
            for combination in itertools.combinations(range(1, self.p + 1), d):
                yield Model(indices=combination)

    def blocks(self, chunk_size: int = CHUNK_SIZE) -> Iterator[Tuple[int, np.ndarray]]:
        for d in range(self.dmax + 1):
            combinations = itertools.combinations(range(self.p), d)
            while chunk := list(itertools.islice(combinations, chunk_size)):
                yield d, np.array(chunk, dtype=np.intp).reshape(len(chunk), d)

    def count_at(self, d: int) -> int:
        return math.comb(self.p, d) if 0 <= d <= self.dmax else 0

    def contains(self, m: Model) -> bool:
        return m.dim <= self.dmax and (not m.indices or m.indices[-1] <= self.p)


class ExplicitCollection(BaseCollection):
    """A user supplied list of models, optionally with prior weights.

    Models are re-ordered (with their weights) into the canonical enumeration order. Weights must be strictly
    positive; a total off by at most 1e-6 is renormalized, anything further is an error.
    """

    kind: Literal["explicit"] = "explicit"
    models: Tuple[Model, ...]
    priors: Optional[Tuple[float, ...]] = None

    _position: Dict[Model, int] = PrivateAttr(default_factory=dict)
    _counts: Counter = PrivateAttr(default_factory=Counter)

    @model_validator(mode="before")
    @classmethod
    def sort_models(cls, data):
        if not isinstance(data, dict) or "models" not in data:
            return data

        models = [m if isinstance(m, Model) else Model(indices=m) for m in data["models"]]
        if len(set(models)) != len(models):
            duplicated = sorted({str(m) for m in models if models.count(m) > 1})
            raise ValueError(f"Models can appear at most once in a collection. Duplicated: {', '.join(duplicated)}.")

        priors = data.get("priors")
        if priors is not None and len(priors) != len(models):
            raise ValueError(f"Got {len(priors)} prior weights for {len(models)} models.")

        order = sorted(range(len(models)), key=lambda i: models[i].sort_key)
        data = dict(data)
        data["models"] = tuple(models[i] for i in order)
        if priors is not None:
            data["priors"] = tuple(priors[i] for i in order)
        return data

    @field_validator("priors")
    def normalize_priors(cls, value, info: ValidationInfo):
        if value is None:
            return value
        if any(not weight > 0 for weight in value):
            raise ValueError("Prior weights must be strictly positive.")

        total = math.fsum(value)
        if abs(total - 1.0) > PRIOR_RENORMALIZE_TOLERANCE:
            raise ValueError(f"Prior weights sum to {total}, expected 1.")
        if abs(total - 1.0) > PRIOR_SUM_TOLERANCE:
            warn(f"Prior weights sum to {total}, renormalizing.", UserWarning, stacklevel=2)
        return tuple(weight / total for weight in value)

    @model_validator(mode="after")
    def models_within_p(self):
        for m in self.models:
            if m.indices and m.indices[-1] > self.p:
                raise ValueError(f"Model {m} refers to covariate {m.indices[-1]} but p={self.p}.")
        return self

    def model_post_init(self, __context) -> None:
        self._position = {m: i for i, m in enumerate(self.models)}
        self._counts = Counter(m.dim for m in self.models)

    @property
    def max_dim(self) -> int:
        return max((m.dim for m in self.models), default=0)

    @property
    def cardinality(self) -> int:
        return len(self.models)

    def enumerate(self) -> Iterator[Model]:
        yield from self.models

    def blocks(self, chunk_size: int = CHUNK_SIZE) -> Iterator[Tuple[int, np.ndarray]]:
        for d, group in itertools.groupby(self.models, key=lambda m: m.dim):
            columns = [m.columns for m in group]
            for start in range(0, len(columns), chunk_size):
                chunk = columns[start : start + chunk_size]
                yield d, np.array(chunk, dtype=np.intp).reshape(len(chunk), d)

    def count_at(self, d: int) -> int:
        return self._counts.get(d, 0)

    def model_at(self, position: int) -> Model:
        return self.models[position]

    def contains(self, m: Model) -> bool:
        return m in self._position

    def prior(self, m: Model) -> float:
        if self.priors is None:
            raise ValueError("This collection has no prior weights.")
        try:
            return self.priors[self._position[m]]
        except KeyError as e:
            raise ModelNotInCollection(f"Model {{{m}}} is not in the collection.") from e


ModelCollection = Annotated[
    Union[OrderedCollection, CompleteCollection, ExplicitCollection],
    Field(discriminator="kind"),
]


def enumerate_models(c: BaseCollection) -> Iterator[Model]:
    return c.enumerate()


def complexity_h(c: BaseCollection, d: int) -> float:
    """H(d) = log(Card{m in c, d_m = d}) / d, zero when at most one model has dimension d."""
    if d < 1:
        raise ValueError(f"H(d) is defined for d >= 1, got {d}.")
    count = c.count_at(d)
    if count <= 1:
        return 0.0
    return math.log(count) / d


def prior_l(c: ExplicitCollection, m: Model) -> float:
    """l_m = -log(pi(m)) / d_m, with l_{} = 1 by convention."""
    weight = c.prior(m)
    if m.dim == 0:
        return 1.0
    return -math.log(weight) / m.dim


def recommended_complete_dmax(n: int, p: float) -> int:
    """Advised cap n / (2.5 [2 + log(p/n v 1)]) ^ p for complete variable selection, at least 1."""
    cap = math.floor(n / (2.5 * (2.0 + math.log(max(p / n, 1.0)))))
    return max(1, min(int(p), cap))


def _parse_model_line(text: str, path: Path, line_number: int) -> Tuple[Model, Optional[float]]:
    indices, _, weight = text.partition(":")
    indices = indices.strip()
    if indices == "{}":
        indices = ""
    try:
        m = Model(indices=indices)
        return m, float(weight) if weight.strip() else None
    except ValueError as e:
        raise ConfigError(f"{path}:{line_number}: cannot parse model line {text!r}.", line=line_number) from e


def load_explicit_collection(path: Union[str, Path], p: int) -> ExplicitCollection:
    """Read one model per line: comma separated 1-based indices, optionally followed by `:` and a prior weight.

    `#` starts a comment. The empty model is written `{}` (or nothing) before the colon.
    """
    path = Path(path)
    models = []
    weights = []
    for line_number, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        text = raw.split("#", 1)[0].strip()
        if not text:
            continue
        m, weight = _parse_model_line(text, path, line_number)
        models.append(m)
        weights.append(weight)

    with_weight = [weight is not None for weight in weights]
    if any(with_weight) and not all(with_weight):
        raise ConfigError(f"{path}: either every model carries a prior weight or none does.")

    try:
        return ExplicitCollection(p=p, models=models, priors=weights if all(with_weight) and weights else None)
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e
