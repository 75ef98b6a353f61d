import math

import numpy as np
import pytest
from pydantic import TypeAdapter, ValidationError

from randes.base.exceptions import BadDimension, EvenP, NotPSD
from randes.base.types import GroundTruth
from randes.simulation.design import (
    CovarianceBuilder,
    ExplicitCovariance,
    SeedSpec,
    build_circulant,
    build_sigma2,
    exp_circulant,
    explicit_matrix,
    generator_version,
    identity,
    poly_circulant,
    read_covariance_csv,
    sample_dataset,
    sample_design,
    toroidal_distance,
    write_covariance_csv,
)


def test_sigma2():
    sigma = build_sigma2(20)
    assert sigma[0, 0] == pytest.approx(0.5 + 1 / 2.44 + 0.5 / (0.5 + 18 / 400), rel=1e-12)
    assert np.allclose(sigma, sigma.T, rtol=0, atol=1e-15)
    assert np.linalg.eigvalsh(sigma).min() > 0
    # Covariates beyond the third only share the mixing row.
    assert sigma[5, 6] == pytest.approx(1 / 400 / (0.5 + 18 / 400))


@pytest.mark.parametrize("p", [0, 3])
def test_sigma2_needs_four_covariates(p):
    with pytest.raises(BadDimension):
        build_sigma2(p)


def test_identity():
    assert np.array_equal(identity(3), np.eye(3))
    with pytest.raises(BadDimension):
        identity(0)


@pytest.mark.parametrize(
    "i,j,p,expected",
    [
        [0, 1, 11, 1],
        [0, 10, 11, 1],
        [2, 8, 11, 5],
        [3, 3, 11, 0],
    ],
)
def test_toroidal_distance(i, j, p, expected):
    assert toroidal_distance(i, j, p) == expected


@pytest.mark.parametrize(
    "build,p,parameter",
    [
        [exp_circulant, 11, 0.5],
        [exp_circulant, 21, 0.1],
        [poly_circulant, 11, 1.0],
        [poly_circulant, 31, 0.5],
    ],
)
def test_circulant_spectrum(build, p, parameter):
    circulant = build(p, parameter)
    assert np.allclose(np.sort(circulant.eigenvalues), np.linalg.eigvalsh(circulant.matrix), atol=1e-9)
    assert circulant.min_eigenvalue > -1e-9
    assert np.diag(circulant.matrix) == pytest.approx(np.ones(p))
    assert np.array_equal(circulant.matrix, circulant.matrix.T)


def test_exp_circulant_entries():
    matrix = exp_circulant(11, 0.5).matrix
    assert matrix[0, 1] == pytest.approx(math.exp(-0.5))
    assert matrix[0, 10] == pytest.approx(math.exp(-0.5))
    assert matrix[0, 5] == pytest.approx(math.exp(-2.5))


def test_circulant_errors():
    with pytest.raises(EvenP):
        exp_circulant(10, 0.5)
    with pytest.raises(ValueError, match="corr_fn"):
        build_circulant(5, lambda k: 0.5)
    with pytest.raises(NotPSD) as e:
        build_circulant(7, lambda k: 1.0 if k == 0 else -0.9)
    assert e.value.min_eigenvalue == pytest.approx(1.0 - 0.9 * 6)


def test_explicit_matrix():
    assert np.array_equal(explicit_matrix([[2.0, 0.5], [0.5, 1.0]]), [[2.0, 0.5], [0.5, 1.0]])
    with pytest.raises(BadDimension):
        explicit_matrix([[1.0, 0.0]])
    with pytest.raises(ValueError, match="symmetric"):
        explicit_matrix([[1.0, 0.5], [0.4, 1.0]])
    with pytest.raises(NotPSD):
        explicit_matrix([[1.0, 2.0], [2.0, 1.0]])


def test_covariance_csv(tmp_path):
    sigma = build_sigma2(6)
    path = tmp_path / "sigma.csv"
    write_covariance_csv(path, sigma)
    assert np.array_equal(read_covariance_csv(path), sigma)
    assert len(path.read_text().splitlines()) == 6


def test_covariance_builders(tmp_path):
    adapter = TypeAdapter(CovarianceBuilder)
    assert np.array_equal(adapter.validate_python({"kind": "sigma2", "p": 8}).build(), build_sigma2(8))
    assert adapter.validate_python({"kind": "exp_circulant", "p": 5, "omega": 1.0}).build().shape == (5, 5)

    path = tmp_path / "sigma.csv"
    write_covariance_csv(path, np.eye(3))
    assert np.array_equal(ExplicitCovariance(p=3, path=path).build(), np.eye(3))
    with pytest.raises(BadDimension):
        ExplicitCovariance(p=4, path=path).build()
    with pytest.raises(ValidationError, match="does not exist"):
        ExplicitCovariance(p=3, path=tmp_path / "missing.csv")
    with pytest.raises(ValidationError):
        adapter.validate_python({"kind": "poly_circulant", "p": 5})


def test_seed_streams():
    seed = SeedSpec(master_seed=42)
    assert np.array_equal(seed.generator(3).standard_normal(5), seed.generator(3).standard_normal(5))
    assert not np.array_equal(seed.generator(3).standard_normal(5), seed.generator(4).standard_normal(5))
    other = SeedSpec(master_seed=43)
    assert not np.array_equal(seed.generator(0).standard_normal(5), other.generator(0).standard_normal(5))
    assert 0 <= SeedSpec.from_entropy().master_seed < 2**64
    assert generator_version().endswith("/PCG64")


@pytest.mark.parametrize("master_seed", [-1, 2**64])
def test_seed_range(master_seed):
    with pytest.raises(ValidationError):
        SeedSpec(master_seed=master_seed)


def test_sample_dataset(independent_truth, seed):
    data = sample_dataset(independent_truth, 15, seed, 0)
    assert (data.n, data.p) == (15, 20)
    again = sample_dataset(independent_truth, 15, seed, 0)
    assert np.array_equal(data.x, again.x)
    assert np.array_equal(data.y, again.y)
    assert not np.array_equal(data.y, sample_dataset(independent_truth, 15, seed, 1).y)
    with pytest.raises(ValueError):
        sample_dataset(independent_truth, 0, seed, 0)


def test_noiseless_sample(seed):
    truth = GroundTruth(theta=[1.0, -1.0, 0.0], sigma=np.eye(3), noise_var=0.0)
    data = sample_dataset(truth, 10, seed, 0)
    assert np.allclose(data.y, data.x @ truth.theta)


def test_sample_design_covariance(correlated_truth, seed):
    x = sample_design(correlated_truth, 100_000, seed.generator(0))
    assert np.abs(x.T @ x / len(x) - correlated_truth.sigma).max() <= 0.06


def test_sample_design_identity(independent_truth, seed):
    x = sample_design(independent_truth, 100_000, seed.generator(1))
    assert np.abs(x.T @ x / len(x) - np.eye(20)).max() <= 0.02
    assert sample_design(independent_truth, 7, seed.generator(2), batch=(3,)).shape == (3, 7, 20)
