"""Covariance builders, Gaussian random designs and per-replication random streams.

All randomness goes through `SeedSpec.generator(rep)`: one independent PCG64 stream per replication, derived from
the master seed by `numpy.random.SeedSequence` spawn keys. Two calls with the same (seed, rep) produce the same
bytes whatever the thread or process they run in.
"""
import math
from fractions import Fraction
from pathlib import Path
from typing import Callable, Literal, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import fft, linalg
from typing_extensions import Annotated

from ..base.exceptions import BadDimension, EvenP, NotPSD
from ..base.types import DataSet, GroundTruth

PSD_TOLERANCE = 1e-9
SYMMETRY_TOLERANCE = 1e-10


def generator_version() -> str:
    return f"numpy-{np.__version__}/PCG64"


class SeedSpec(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    master_seed: int = Field(ge=0, lt=2**64)

    def generator(self, rep: int) -> np.random.Generator:
        """Independent stream for replication `rep`."""
        sequence = np.random.SeedSequence(self.master_seed, spawn_key=(rep,))
        return np.random.Generator(np.random.PCG64(sequence))

    @classmethod
    def from_entropy(cls) -> "SeedSpec":
        return cls(master_seed=int(np.random.SeedSequence().generate_state(1, dtype=np.uint64)[0]))


def identity(p: int) -> np.ndarray:
    if p < 1:
        raise BadDimension(f"p must be positive, got {p}.")
    return np.eye(p)


def build_sigma2(p: int) -> np.ndarray:
    """A'A where the first three rows of A mix the leading covariates and the other rows are canonical.

    The normalization constant of the third row is computed in exact rational arithmetic before the square root.

    Raises:
        BadDimension: if p < 4.
    """
    if p < 4:
        raise BadDimension(f"sigma2 needs p >= 4, got {p}.")

    a = np.eye(p)
    a[0] = 0.0
    a[0, :2] = (1.0, -1.0)
    a[0] /= math.sqrt(2.0)

    a[1] = 0.0
    a[1, :2] = (-1.0, 1.2)
    a[1] /= math.sqrt(Fraction(61, 25))

    a[2] = 1.0 / p
    a[2, :2] = 1.0 / math.sqrt(2.0)
    a[2] /= math.sqrt(Fraction(1, 2) + Fraction(p - 2, p * p))

    sigma = a.T @ a
    _check_positive_definite(sigma)
    return sigma


def _check_positive_definite(sigma: np.ndarray) -> None:
    try:
        linalg.cholesky(sigma, lower=True)
    except linalg.LinAlgError as e:
        smallest = float(linalg.eigh(sigma, eigvals_only=True)[0])
        raise NotPSD(f"Covariance is not positive definite, smallest eigenvalue {smallest:.3g}.", smallest) from e


class CirculantCovariance(BaseModel):
    """Stationary correlation on the discrete torus, with its spectrum."""

    model_config = ConfigDict(extra="forbid", arbitrary_types_allowed=True)

    matrix: np.ndarray
    eigenvalues: np.ndarray

    @property
    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues.min())


def toroidal_distance(i: int, j: int, p: int) -> int:
    return min(abs(i - j), p - abs(i - j))


def build_circulant(p: int, corr_fn: Callable[[int], float]) -> CirculantCovariance:
    """M[i, j] = corr_fn(|i - j|_p) with eigenvalues from the discrete Fourier transform of the first row.

    Raises:
        EvenP: if p is even.
        NotPSD: if an eigenvalue is below -1e-9, carrying the most negative one.
    """
    if p < 1 or p % 2 == 0:
        raise EvenP(f"Circulant correlations need an odd p, got {p}.")
    if not math.isclose(corr_fn(0), 1.0):
        raise ValueError(f"corr_fn(0) must be 1, got {corr_fn(0)}.")

    first_row = np.array([corr_fn(toroidal_distance(0, k, p)) for k in range(p)])
    # Symmetric first row, so the spectrum is the cosine transform: real part of the DFT.
    eigenvalues = fft.fft(first_row).real
    smallest = float(eigenvalues.min())
    if smallest < -PSD_TOLERANCE:
        raise NotPSD(f"Circulant matrix has eigenvalue {smallest:.3g}.", smallest)
    return CirculantCovariance(matrix=linalg.circulant(first_row), eigenvalues=eigenvalues)


def exp_circulant(p: int, omega: float) -> CirculantCovariance:
    """corr(X_i, X_j) = exp(-omega |i - j|_p)."""
    return build_circulant(p, lambda k: math.exp(-omega * k))


def poly_circulant(p: int, t: float) -> CirculantCovariance:
    """corr(X_i, X_j) = (1 + |i - j|_p)^(-t)."""
    return build_circulant(p, lambda k: (1.0 + k) ** (-t))


def explicit_matrix(matrix) -> np.ndarray:
    """Validate a user supplied covariance: square, symmetric within 1e-10, Cholesky factorizable."""
    sigma = np.array(matrix, dtype=float)
    if sigma.ndim != 2 or sigma.shape[0] != sigma.shape[1]:
        raise BadDimension(f"Covariance must be square, got shape {sigma.shape}.")
    if not np.allclose(sigma, sigma.T, rtol=0.0, atol=SYMMETRY_TOLERANCE):
        raise ValueError("Covariance is not symmetric.")
    _check_positive_definite(sigma)
    return sigma


def read_covariance_csv(path: Union[str, Path]) -> np.ndarray:
    return explicit_matrix(np.loadtxt(path, delimiter=",", ndmin=2))


def write_covariance_csv(path: Union[str, Path], sigma: np.ndarray) -> None:
    """One row per line, values in shortest round-trip form."""
    lines = [",".join(repr(float(value)) for value in row) for row in np.asarray(sigma)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


class BaseCovariance(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)

    p: int = Field(ge=1)

    def build(self) -> np.ndarray:  # pragma: no cover
        ...


class IdentityCovariance(BaseCovariance):
    kind: Literal["identity"] = "identity"

    def build(self) -> np.ndarray:
        return identity(self.p)


class Sigma2Covariance(BaseCovariance):
    kind: Literal["sigma2"] = "sigma2"

    def build(self) -> np.ndarray:
        return build_sigma2(self.p)


class ExpCirculantCovariance(BaseCovariance):
    kind: Literal["exp_circulant"] = "exp_circulant"
    omega: float = Field(gt=0)

    def build(self) -> np.ndarray:
        return exp_circulant(self.p, self.omega).matrix


class PolyCirculantCovariance(BaseCovariance):
    kind: Literal["poly_circulant"] = "poly_circulant"
    t: float = Field(gt=0)

    def build(self) -> np.ndarray:
        return poly_circulant(self.p, self.t).matrix


class ExplicitCovariance(BaseCovariance):
    """Covariance read from a CSV file, one matrix row per line."""

    kind: Literal["explicit"] = "explicit"
    path: Path

    @field_validator("path")
    def path_exists(cls, value):
        if not value.is_file():
            raise ValueError(f"Covariance file {value} does not exist.")
        return value

    def build(self) -> np.ndarray:
        sigma = read_covariance_csv(self.path)
        if sigma.shape != (self.p, self.p):
            raise BadDimension(f"{self.path} holds a {sigma.shape} matrix, expected p={self.p}.")
        return sigma


CovarianceBuilder = Annotated[
    Union[
        IdentityCovariance,
        Sigma2Covariance,
        ExpCirculantCovariance,
        PolyCirculantCovariance,
        ExplicitCovariance,
    ],
    Field(discriminator="kind"),
]


def sample_design(truth: GroundTruth, n: int, rng: np.random.Generator, batch: Tuple[int, ...] = ()) -> np.ndarray:
    """Rows drawn from N(0, sigma) as standard normals times the transposed Cholesky factor, shape batch + (n, p)."""
    return rng.standard_normal(tuple(batch) + (n, truth.p)) @ truth.cholesky.T


def sample_dataset(truth: GroundTruth, n: int, seed: SeedSpec, rep: int) -> DataSet:
    """n i.i.d. observations of Y = X theta + eps, reproducible from (seed, rep)."""
    if n < 1:
        raise ValueError(f"n must be positive, got {n}.")
    rng = seed.generator(rep)
    x = sample_design(truth, n, rng)
    noise = math.sqrt(truth.noise_var) * rng.standard_normal(n)
    return DataSet(x=x, y=x @ truth.theta + noise)
