import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose

from mgpd.errors import DomainError
from mgpd.params import (
    GevParams,
    GpParams,
    gev_orbit,
    gev_to_gp,
    gp_cdf,
    joint_survival,
    marginal_survival,
    standardize,
    std_cdf,
    unstandardize,
)
from mgpd.stdf import CompleteDependence, Independence, Logistic
from oracles import gev_from_gp, gp_cdf_from_gev


def test_independence_example(independence2):
    assert_allclose(gp_cdf(independence2, [0.0, 0.0]), 0.0, atol=1e-15)
    assert_allclose(gp_cdf(independence2, [1.0, 1.0]), 0.5, rtol=1e-14)


def test_complete_dependence_example(complete2):
    assert_allclose(gp_cdf(complete2, [1.0, 1.0]), 1 - np.exp(-1), rtol=1e-14)


def test_logistic_std_cdf_example():
    # exchangeable logistic theta = 1/2 has pi = 2^(-1/2)
    pi = np.full(2, 2**-0.5)
    assert_allclose(std_cdf(pi, Logistic(2, 0.5), [0.0, 0.0]), 0.0, atol=1e-15)
    z = np.array([1.0, 2.0])
    expected = 1.0 - np.sqrt(np.sum((pi * np.exp(-z)) ** 2))
    assert_allclose(std_cdf(pi, Logistic(2, 0.5), z), expected, rtol=1e-14)


@pytest.mark.parametrize("x", [[0.5, 1.0], [-0.3, 2.0], [1.5, -0.8], [3.0, 3.0], [-0.2, -0.1]])
def test_cdf_against_gev_definition(logistic2, x):
    expected = gp_cdf_from_gev(logistic2.ell, logistic2.sigma, logistic2.gamma, logistic2.tau, x)
    assert_allclose(gp_cdf(logistic2, x), expected, rtol=1e-12, atol=1e-14)


def test_gev_to_gp_matches_construction():
    sigma, gamma, tau = np.array([1.0, 0.5, 2.0]), np.array([0.3, 0.0, -0.2]), np.array([0.5, 1.0, 1.5])
    mu, alpha = gev_from_gp(sigma, gamma, tau)
    h = gev_to_gp(GevParams(mu, gamma, alpha, Logistic(3, 0.6)))
    assert_allclose(h.sigma, sigma, rtol=1e-13)
    assert_allclose(h.tau, tau * 3 / tau.sum(), rtol=1e-13)
    assert_allclose(Logistic(3, 0.6)(h.pi), 1.0, rtol=1e-14)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(st.floats(-2, 2), min_size=2, max_size=2),
    st.lists(st.floats(-0.5, 0.5), min_size=2, max_size=2),
    st.lists(st.floats(0.2, 5), min_size=2, max_size=2),
    st.floats(0.05, 50),
    st.floats(0.1, 1.0),
)
def test_orbit_invariance(mu, gamma, alpha, t, theta):
    g = GevParams(mu, gamma, alpha, Logistic(2, theta))
    if np.any(g.sigma <= 0):
        with pytest.raises(DomainError):
            gev_to_gp(g)
        return
    a, b = gev_to_gp(g), gev_to_gp(gev_orbit(g, t))
    for name in ("sigma", "gamma", "pi", "tau"):
        assert_allclose(getattr(b, name), getattr(a, name), rtol=1e-9, atol=1e-10)


def test_gamma_zero_branch_is_continuous():
    ell = Logistic(2, 0.5)
    x = [0.7, -0.4]
    base = gp_cdf(GpParams.from_tau([1.0, 1.0], [0.0, 0.0], [1.0, 1.0], ell), x)
    near = gp_cdf(GpParams.from_tau([1.0, 1.0], [1e-9, -1e-9], [1.0, 1.0], ell), x)
    assert_allclose(near, base, rtol=1e-7)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-0.9, 20), min_size=2, max_size=2))
def test_standardize_round_trip(x):
    h = GpParams.from_tau([1.0, 2.0], [0.5, -0.05], [1.0, 1.0], Logistic(2, 0.5))
    x = np.array(x)
    assert_allclose(unstandardize(h, standardize(h, x)), x, rtol=1e-10, atol=1e-12)


def test_standardize_outside_support():
    h = GpParams.from_tau([1.0, 1.0], [0.5, 0.5], [1.0, 1.0], Independence(2))
    with pytest.raises(DomainError):
        standardize(h, [-3.0, 0.0])
    with pytest.raises(DomainError):
        gp_cdf(h, [-3.0, 0.0])


def test_cdf_at_lower_boundary_and_minus_inf(independence2):
    # X_1 sits at -1 with probability pi_2, the boundary is included by right-continuity
    assert_allclose(gp_cdf(independence2, [-1.0, np.inf]), 0.5, rtol=1e-14)
    h = GpParams.from_tau([1.0, 1.0], [0.0, 0.0], [1.0, 1.0], Logistic(2, 0.5))
    assert gp_cdf(h, [-np.inf, 5.0]) == 0.0


def test_cdf_monotone_and_limits(logistic2):
    # the second margin has gamma < 0 and upper endpoint sigma / |gamma| = 20
    grid = np.linspace(-1.5, 20, 50)
    vals = gp_cdf(logistic2, np.column_stack([grid, grid]))
    assert np.all(np.diff(vals) >= -1e-15)
    assert_allclose(gp_cdf(logistic2, [1e12, 20.0]), 1.0, atol=1e-6)
    with pytest.raises(DomainError):
        gp_cdf(logistic2, [0.0, 21.0])


def test_survival_identities(logistic2):
    x = np.array([0.4, 1.1])
    surv = marginal_survival(logistic2, x)
    assert_allclose(surv, logistic2.pi * (1 + logistic2.gamma * x / logistic2.sigma) ** (-1 / logistic2.gamma))
    assert_allclose(joint_survival(logistic2, x), 1 - gp_cdf(logistic2, x), rtol=1e-12)
    with pytest.raises(DomainError):
        marginal_survival(logistic2, [-0.1, 0.0])


def test_constraint_is_enforced():
    with pytest.raises(DomainError):
        GpParams.from_pi([1.0, 1.0], [0.0, 0.0], [0.9, 0.9], Logistic(2, 0.5))
    GpParams.from_pi([1.0, 1.0], [0.0, 0.0], [2**-0.5, 2**-0.5], Logistic(2, 0.5))


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(sigma=[1.0, -1.0]),
        dict(sigma=[1.0, np.nan]),
        dict(gamma=[0.1, 0.2, 0.3]),
        dict(tau=[1.0, 0.0]),
    ],
)
def test_invalid_parameters(kwargs):
    args = dict(sigma=[1.0, 1.0], gamma=[0.0, 0.0], tau=[1.0, 1.0])
    args.update(kwargs)
    with pytest.raises(DomainError):
        GpParams.from_tau(args["sigma"], args["gamma"], args["tau"], Logistic(2, 0.5))


def test_invalid_gev():
    with pytest.raises(DomainError):
        GevParams([0.0, 0.0], [0.0, 0.0], [1.0, 0.0], Independence(2))
    g = GevParams([10.0, 0.0], [0.5, 0.0], [1.0, 1.0], Independence(2))
    with pytest.raises(DomainError, match=r"\[0\]"):
        gev_to_gp(g)
    with pytest.raises(DomainError):
        gev_orbit(g, 0.0)


def test_serialization_round_trip(logistic2):
    again = GpParams.from_dict(logistic2.to_dict())
    for name in ("sigma", "gamma", "pi", "tau"):
        assert_allclose(getattr(again, name), getattr(logistic2, name), rtol=1e-15)
    g = GevParams([0.1, 0.2], [0.0, 0.3], [1.0, 2.0], CompleteDependence(2))
    assert_allclose(GevParams.from_dict(g.to_dict()).alpha, g.alpha)
    with pytest.raises(DomainError):
        GpParams.from_dict({"sigma": [1.0], "gamma": [0.0], "stdf": {"variant": "independence", "dim": 1}})
