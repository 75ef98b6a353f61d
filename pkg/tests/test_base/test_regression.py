import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randes.base.exceptions import DimensionTooLarge, LengthMismatch, RankDeficient
from randes.base.regression import (
    bias,
    closed_form_risk,
    empirical_loss,
    fit_least_squares,
    nested_coefficients,
    nested_empirical_losses,
    oracle_bound_term,
    population_loss,
    project_theta,
    stacked_biases,
    stacked_empirical_losses,
)
from randes.base.types import DataSet, GroundTruth, Model


def test_fit_mean_of_two_points():
    result = fit_least_squares(DataSet(x=[[1.0], [1.0]], y=[2.0, 4.0]), Model(indices=[1]))
    assert result.coefficients.tolist() == pytest.approx([3.0])
    assert result.empirical_loss == pytest.approx(1.0)


def test_fit_empty_model(noisy_data):
    result = fit_least_squares(noisy_data, Model())
    assert not result.coefficients.any()
    assert result.empirical_loss == pytest.approx(noisy_data.y @ noisy_data.y / noisy_data.n)


def test_fit_interpolates_noiseless_data(rng):
    x = rng.standard_normal((10, 3))
    data = DataSet(x=x, y=x @ np.array([1.0, -2.0, 0.5]))
    result = fit_least_squares(data, Model(indices=[1, 2, 3]))
    assert result.coefficients == pytest.approx([1.0, -2.0, 0.5])
    assert result.empirical_loss == pytest.approx(0.0, abs=1e-20)


def test_fit_is_zero_outside_model(noisy_data):
    m = Model(indices=[2, 5])
    result = fit_least_squares(noisy_data, m)
    outside = np.setdiff1d(np.arange(noisy_data.p), m.columns)
    assert not result.coefficients[outside].any()
    assert result.empirical_loss == pytest.approx(empirical_loss(noisy_data, result.coefficients), rel=1e-8)


def test_fit_errors(rng):
    data = DataSet(x=rng.standard_normal((3, 4)), y=rng.standard_normal(3))
    with pytest.raises(DimensionTooLarge) as e:
        fit_least_squares(data, Model(indices=[1, 2, 3]))
    assert e.value.model == Model(indices=[1, 2, 3])

    x = rng.standard_normal((10, 2))
    duplicated = DataSet(x=np.column_stack([x, x[:, 0]]), y=rng.standard_normal(10))
    with pytest.raises(RankDeficient):
        fit_least_squares(duplicated, Model(indices=[1, 3]))


def test_fit_beats_random_candidates(noisy_data, rng):
    m = Model(indices=[1, 2, 5])
    best = fit_least_squares(noisy_data, m).empirical_loss
    for _ in range(100):
        candidate = np.zeros(noisy_data.p)
        candidate[m.columns] = rng.standard_normal(m.dim) * 3
        assert best <= empirical_loss(noisy_data, candidate) + 1e-12


def test_nested_models_decrease_empirical_loss(noisy_data):
    losses = [fit_least_squares(noisy_data, Model(indices=tuple(range(1, d + 1)))).empirical_loss for d in range(7)]
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


@pytest.mark.parametrize(
    "x,y,theta_prime,expected",
    [
        [[[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0], [0.0, 0.0], 1.0],
        [[[1.0, 0.0], [0.0, 1.0]], [1.0, 1.0], [1.0, 1.0], 0.0],
        [[[1.0, 2.0], [3.0, 4.0]], [5.0, 11.0], [1.0, 2.0], 0.0],
        [[[1.0], [1.0], [1.0]], [1.0, 2.0, 3.0], [0.0], 14.0 / 3.0],
    ],
)
def test_empirical_loss(x, y, theta_prime, expected):
    assert empirical_loss(DataSet(x=x, y=y), np.array(theta_prime)) == pytest.approx(expected)


def test_empirical_loss_length_mismatch(noisy_data):
    with pytest.raises(LengthMismatch):
        empirical_loss(noisy_data, np.zeros(noisy_data.p + 1))


@pytest.mark.parametrize(
    "sigma,diff,expected",
    [
        [np.eye(3), [1.0, 2.0, 0.0], 5.0],
        [np.eye(3), [0.0, 0.0, 0.0], 0.0],
        [[[1.0, 0.5], [0.5, 1.0]], [1.0, 1.0], 3.0],
    ],
)
def test_population_loss(sigma, diff, expected):
    p = len(diff)
    truth = GroundTruth(theta=np.zeros(p), sigma=sigma, noise_var=1.0)
    theta2 = np.linspace(-1.0, 1.0, p)
    assert population_loss(truth, theta2 + np.array(diff), theta2) == pytest.approx(expected)
    assert population_loss(truth, theta2, theta2 + np.array(diff)) == pytest.approx(expected)


def test_population_loss_length_mismatch(independent_truth):
    with pytest.raises(LengthMismatch):
        population_loss(independent_truth, np.zeros(3), np.zeros(20))


@pytest.mark.parametrize(
    "sigma,theta,m,expected",
    [
        [np.eye(3), [1.0, 2.0, 3.0], [1, 3], [1.0, 0.0, 3.0]],
        [np.eye(3), [1.0, 2.0, 3.0], [], [0.0, 0.0, 0.0]],
        [[[1.0, 0.9], [0.9, 1.0]], [0.0, 1.0], [1], [0.9, 0.0]],
        [[[1.0, 0.9], [0.9, 1.0]], [0.5, 1.0], [1, 2], [0.5, 1.0]],
    ],
)
def test_project_theta(sigma, theta, m, expected):
    truth = GroundTruth(theta=theta, sigma=sigma, noise_var=1.0)
    assert project_theta(truth, Model(indices=m)) == pytest.approx(expected)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), dim=st.integers(1, 5))
def test_pythagoras(seed, dim):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((6, 6))
    truth = GroundTruth(theta=rng.standard_normal(6), sigma=a @ a.T + 0.5 * np.eye(6), noise_var=1.0)
    m = Model.from_columns(np.sort(rng.choice(6, size=dim, replace=False)))
    theta_m = project_theta(truth, m)
    theta_hat = np.zeros(6)
    theta_hat[m.columns] = rng.standard_normal(dim)
    total = population_loss(truth, theta_hat, truth.theta)
    parts = population_loss(truth, theta_hat, theta_m) + population_loss(truth, theta_m, truth.theta)
    assert abs(total - parts) <= 1e-8 * max(1.0, total)


def test_closed_form_risk(independent_truth):
    assert closed_form_risk(independent_truth, Model(indices=[1, 2, 3]), 30) == pytest.approx(3.0 / 26.0)
    assert closed_form_risk(independent_truth, Model(), 30) == pytest.approx(5.25)
    assert closed_form_risk(independent_truth, Model(indices=[1]), 20) == pytest.approx(1.375)
    with pytest.raises(DimensionTooLarge):
        closed_form_risk(independent_truth, Model(indices=[1, 2, 3]), 4)


def test_bias_and_oracle_bound_term(independent_truth):
    m = Model(indices=[1])
    assert bias(independent_truth, m) == pytest.approx(1.25)
    assert oracle_bound_term(independent_truth, m, 20, 0.0) == pytest.approx(1.25)
    assert oracle_bound_term(independent_truth, m, 20, 0.5) == pytest.approx(1.25 + 19 / 20 * 0.5 * 2.25)


def test_stacked_losses_match_single_fits(noisy_data):
    columns = np.array([[0, 1], [0, 4], [2, 5], [3, 4]])
    expected = [fit_least_squares(noisy_data, Model.from_columns(row)).empirical_loss for row in columns]
    assert stacked_empirical_losses(noisy_data, columns) == pytest.approx(expected, rel=1e-10)
    assert stacked_empirical_losses(noisy_data, np.empty((1, 0), dtype=int)) == pytest.approx(
        [noisy_data.y @ noisy_data.y / noisy_data.n]
    )


def test_stacked_biases_match_bias(correlated_truth):
    columns = np.array([[0, 1], [0, 2], [1, 2], [2, 3]])
    expected = [bias(correlated_truth, Model.from_columns(row)) for row in columns]
    assert stacked_biases(correlated_truth, columns) == pytest.approx(expected, rel=1e-9, abs=1e-6)


def test_nested_profiles(noisy_data):
    losses = nested_empirical_losses(noisy_data, 4)
    coefficients = nested_coefficients(noisy_data, 4)
    for d in range(5):
        fit = fit_least_squares(noisy_data, Model(indices=tuple(range(1, d + 1))))
        assert losses[d] == pytest.approx(fit.empirical_loss, rel=1e-10)
        assert coefficients[d] == pytest.approx(fit.coefficients)


def test_nested_profiles_too_large(noisy_data):
    with pytest.raises(DimensionTooLarge):
        nested_empirical_losses(DataSet(x=noisy_data.x[:3], y=noisy_data.y[:3]), 3)
    assert math.isclose(nested_empirical_losses(noisy_data, 0)[0], noisy_data.y @ noisy_data.y / noisy_data.n)
