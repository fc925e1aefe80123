import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from mgpd.errors import DomainError
from mgpd.stdf import (
    GENERATOR_NAMES,
    CompleteDependence,
    DNormMonteCarlo,
    Independence,
    Logistic,
    eval_stdf,
    eval_tail_copula,
    marginal_stdf,
    stdf_from_dict,
    summary_coefficients,
)
from oracles import logistic_stdf_by_quadrature

CLOSED_FORMS = [Independence(3), CompleteDependence(3), Logistic(3, 0.3), Logistic(3, 0.8)]

vectors = st.lists(st.floats(0, 10, allow_nan=False), min_size=3, max_size=3)


def test_examples():
    assert eval_stdf(Independence(2), [0.5, 0.5]) == 1.0
    assert eval_stdf(CompleteDependence(2), [0.3, 0.7]) == 0.7
    assert_allclose(eval_stdf(Logistic(2, 0.5), [1, 1]), np.sqrt(2), rtol=1e-15)
    assert eval_tail_copula(Independence(2), [0.5, 0.5]) == 0.0
    assert_allclose(eval_tail_copula(CompleteDependence(2), [0.3, 0.7]), 0.3, atol=1e-15)
    assert_allclose(eval_tail_copula(Logistic(2, 0.5), [1, 1]), 2 - np.sqrt(2), rtol=1e-14)


@pytest.mark.parametrize("theta", [0.2, 0.5, 0.9])
@pytest.mark.parametrize("y", [[1.0, 1.0], [0.3, 2.0], [1.0, 0.5, 0.25]])
def test_logistic_closed_form_matches_dnorm_integral(theta, y):
    assert_allclose(Logistic(len(y), theta)(y), logistic_stdf_by_quadrature(y, theta), rtol=1e-7)


def test_logistic_monte_carlo_generator():
    mc = DNormMonteCarlo.from_generator("logistic", 2, 1_000_000, seed=11, theta=0.3)
    val, se = mc.evaluate_with_se([1.0, 1.0])
    assert abs(val - Logistic(2, 0.3)([1, 1])) < 3 * se


@settings(max_examples=200, deadline=None)
@given(vectors, st.floats(0, 10))
def test_bounds_and_homogeneity(y, c):
    y = np.array(y)
    for model in CLOSED_FORMS:
        val = model(y)
        assert y.max() - 1e-12 <= val <= y.sum() + 1e-12
        assert abs(model(c * y) - c * val) <= 1e-12 * max(1.0, c * val)


@settings(max_examples=200, deadline=None)
@given(vectors, vectors, st.floats(0, 1))
def test_convexity_on_segments(a, b, lam):
    a, b = np.array(a), np.array(b)
    for model in CLOSED_FORMS:
        mid = model(lam * a + (1 - lam) * b)
        assert mid <= lam * model(a) + (1 - lam) * model(b) + 1e-10


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 10), st.floats(0, 10), st.floats(0.05, 1.0))
def test_two_dim_tail_copula_identity(y1, y2, theta):
    for model in (Independence(2), CompleteDependence(2), Logistic(2, theta)):
        assert abs(model.tail_copula([y1, y2]) - (y1 + y2 - model([y1, y2]))) <= 1e-12 * max(1, y1 + y2)


def test_unit_vectors():
    for model in CLOSED_FORMS:
        for j in range(3):
            e = np.zeros(3)
            e[j] = 2.5
            assert_allclose(model(e), 2.5, rtol=1e-15)


def test_vectorized_rows():
    y = np.array([[1.0, 2.0, 0.5], [0.0, 0.0, 0.0], [3.0, 1.0, 1.0]])
    model = Logistic(3, 0.4)
    assert_allclose(model(y), [model(row) for row in y])


def test_logistic_no_overflow_for_small_theta():
    assert_allclose(Logistic(2, 0.01)([1e3, 1e3]), 1e3 * 2**0.01, rtol=1e-12)


@pytest.mark.parametrize("bad", [[-1.0, 1.0], [1.0, np.nan]])
def test_invalid_arguments(bad):
    with pytest.raises(DomainError):
        Logistic(2, 0.5)(bad)


def test_dimension_and_theta_errors():
    with pytest.raises(DomainError):
        Independence(2)([1.0, 2.0, 3.0])
    with pytest.raises(DomainError):
        Logistic(2, 1.5)
    with pytest.raises(DomainError):
        Logistic(2, 0.0)


def test_marginals():
    m = marginal_stdf(Independence(3), [0, 2])
    assert isinstance(m, Independence) and m.dim == 2
    for model in CLOSED_FORMS:
        assert_allclose(marginal_stdf(model, [1])(np.array([0.7])), 0.7)
    m = marginal_stdf(Logistic(3, 0.5), [0, 1])
    assert_allclose(m([1.0, 1.0]), np.sqrt(2))
    assert_allclose(m([1.0, 1.0]), Logistic(3, 0.5)([1.0, 1.0, 0.0]))
    with pytest.raises(DomainError):
        marginal_stdf(Independence(3), [])
    with pytest.raises(DomainError):
        marginal_stdf(Independence(3), [3])


def test_summary_coefficients():
    assert summary_coefficients(Independence(3)) == (3.0, 0.0)
    assert_allclose(summary_coefficients(CompleteDependence(3)), (1.0, 1.0), atol=1e-15)
    ext, tail = summary_coefficients(Logistic(2, 0.5))
    assert_allclose((ext, tail), (np.sqrt(2), 2 - np.sqrt(2)), rtol=1e-14)


GENERATOR_PARAMS = {"logistic": {"theta": 0.4}}


@pytest.mark.parametrize("name", GENERATOR_NAMES)
def test_dnorm_generators_are_normalized(name):
    mc = DNormMonteCarlo.from_generator(name, 3, 20_000, seed=3, **GENERATOR_PARAMS.get(name, {}))
    assert_allclose(mc.sample.mean(axis=0), 1.0, rtol=1e-12)
    for j in range(3):
        e = np.zeros(3)
        e[j] = 1.0
        assert_allclose(mc(e), 1.0, rtol=1e-12)
    y = np.array([0.4, 1.3, 0.8])
    assert y.max() <= mc(y) <= y.sum()


def test_dnorm_inclusion_exclusion_equals_min_form():
    mc = DNormMonteCarlo.from_generator("lognormal", 3, 50_000, seed=8, scale=0.7, rho=0.4)
    y = np.array([0.5, 1.0, 2.0])
    assert_allclose(mc.tail_copula(y), mc.tail_copula_inclusion_exclusion(y), rtol=1e-12, atol=1e-14)


def test_dnorm_is_frozen_and_deterministic():
    a = DNormMonteCarlo.from_generator("dirichlet", 2, 5_000, seed=4, alpha=2.0)
    b = DNormMonteCarlo.from_generator("dirichlet", 2, 5_000, seed=4, alpha=2.0)
    assert a([1.0, 2.0]) == b([1.0, 2.0])
    with pytest.raises(ValueError):
        a.sample[0, 0] = 1.0


def test_dnorm_homogeneity_within_error():
    mc = DNormMonteCarlo.from_generator("lognormal", 2, 40_000, seed=5)
    y = np.array([0.3, 0.9])
    val, se = mc.evaluate_with_se(y)
    assert abs(mc(4.0 * y) - 4.0 * val) <= 4 * se * 4.0


def test_dnorm_standard_error_is_calibrated():
    z = []
    for seed in range(12):
        mc = DNormMonteCarlo.from_generator("logistic", 2, 20_000, seed=seed, theta=0.3)
        val, se = mc.evaluate_with_se([1.0, 1.0])
        z.append((val - 2**0.3) / se)
    # a z-score spread far from one would signal a miscalibrated standard error
    assert 0.4 < np.std(z) < 2.0


def test_serialization_round_trip():
    for model in CLOSED_FORMS + [DNormMonteCarlo.from_generator("logistic", 3, 1000, seed=2, theta=0.5)]:
        again = stdf_from_dict(model.to_dict())
        assert again == model
        assert_allclose(again([0.2, 0.5, 1.0]), model([0.2, 0.5, 1.0]))


def test_from_dict_errors():
    with pytest.raises(DomainError):
        stdf_from_dict({"variant": "gumbel", "dim": 2})
    with pytest.raises(DomainError):
        stdf_from_dict({"variant": "logistic", "dim": 2, "params": {}})
