from typing import Any, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, PrivateAttr, field_validator, model_validator
from scipy import linalg

from .exceptions import InvalidModel

SYMMETRY_TOLERANCE = 1e-10


def _as_float_array(value: Any, ndim: int) -> np.ndarray:
    array = np.array(value, dtype=float)
    if array.ndim != ndim:
        raise ValueError(f"Expected a {ndim}-dimensional array, got shape {array.shape}.")
    array.setflags(write=False)
    return array


class Model(BaseModel):
    """A sorted subset of covariate indices, 1-based.

    Accepts any iterable of integers or a comma separated string:

        >>> Model(indices=[1, 3])
        >>> Model(indices="1,3")
        >>> Model(indices=())  # the empty model
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    indices: Tuple[int, ...] = ()

    @field_validator("indices", mode="before")
    def split_str(cls, value):
        if isinstance(value, str):
            value = value.strip()
            if not value:
                # Empty string is the empty model, not ('',)
                return ()
            return tuple(int(index) for index in value.split(","))
        if isinstance(value, np.ndarray):
            return tuple(int(index) for index in value.tolist())
        return value

    @field_validator("indices")
    def strictly_increasing(cls, value):
        if any(index < 1 for index in value):
            raise ValueError("Model indices are 1-based and must be positive.")
        if any(a >= b for a, b in zip(value, value[1:])):
            raise ValueError(f"Model indices must be strictly increasing, got {value}.")
        return value

    @property
    def dim(self) -> int:
        return len(self.indices)

    @property
    def columns(self) -> np.ndarray:
        """0-based column positions, ready for numpy indexing."""
        return np.asarray(self.indices, dtype=np.intp) - 1

    @property
    def sort_key(self) -> Tuple[int, Tuple[int, ...]]:
        return self.dim, self.indices

    def check_within(self, p: int) -> "Model":
        if self.indices and self.indices[-1] > p:
            raise InvalidModel(f"Model {self} refers to covariate {self.indices[-1]} but p={p}.")
        return self

    @classmethod
    def from_columns(cls, columns) -> "Model":
        return cls(indices=tuple(int(column) + 1 for column in columns))

    def __str__(self) -> str:
        return ",".join(str(index) for index in self.indices)


EMPTY_MODEL = Model()


class GroundTruth(BaseModel):
    """True coefficients, covariate covariance and noise variance.

    The covariance must be symmetric within 1e-10 and admit a Cholesky factorization. The factor is computed once
    at validation time and reused by the samplers.
    """

    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    theta: np.ndarray
    sigma: np.ndarray
    noise_var: float

    _cholesky: np.ndarray = PrivateAttr()

    @field_validator("theta", mode="before")
    def theta_as_vector(cls, value):
        return _as_float_array(value, ndim=1)

    @field_validator("sigma", mode="before")
    def sigma_as_matrix(cls, value):
        return _as_float_array(value, ndim=2)

    @field_validator("noise_var")
    def non_negative_noise(cls, value):
        if not np.isfinite(value) or value < 0:
            raise ValueError(f"noise_var must be a finite non-negative number, got {value}.")
        return value

    @model_validator(mode="after")
    def check_covariance(self):
        p = self.theta.shape[0]
        if self.sigma.shape != (p, p):
            raise ValueError(f"sigma must be {p}x{p} to match theta, got {self.sigma.shape}.")
        if not np.allclose(self.sigma, self.sigma.T, rtol=0.0, atol=SYMMETRY_TOLERANCE):
            raise ValueError("sigma is not symmetric.")
        try:
            self._cholesky = linalg.cholesky(self.sigma, lower=True)
        except linalg.LinAlgError as e:
            raise ValueError("sigma is not positive definite.") from e
        self._cholesky.setflags(write=False)
        return self

    @property
    def p(self) -> int:
        return self.theta.shape[0]

    @property
    def cholesky(self) -> np.ndarray:
        """Lower triangular L with L @ L.T == sigma."""
        return self._cholesky

    @property
    def support(self) -> Model:
        return Model.from_columns(np.flatnonzero(self.theta))


class DataSet(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    x: np.ndarray
    y: np.ndarray

    @field_validator("x", mode="before")
    def x_as_matrix(cls, value):
        return _as_float_array(value, ndim=2)

    @field_validator("y", mode="before")
    def y_as_vector(cls, value):
        return _as_float_array(value, ndim=1)

    @model_validator(mode="after")
    def check_shapes(self):
        n, p = self.x.shape
        if n != self.y.shape[0]:
            raise ValueError(f"x has {n} rows but y has length {self.y.shape[0]}.")
        if n < 1 or p < 1:
            raise ValueError(f"A data set needs n >= 1 and p >= 1, got n={n}, p={p}.")
        return self

    @property
    def n(self) -> int:
        return self.x.shape[0]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def without_row(self, i: int) -> "DataSet":
        keep = np.arange(self.n) != i
        return DataSet(x=self.x[keep], y=self.y[keep])

    def scaled(self, factor: float) -> "DataSet":
        return DataSet(x=self.x, y=self.y * factor)


class FitResult(BaseModel):
    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    coefficients: np.ndarray
    empirical_loss: float
    model: Model
