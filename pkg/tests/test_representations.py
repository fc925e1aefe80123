import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import special

from mgpd.errors import ContractError, DomainError
from mgpd.params import GpParams, std_cdf
from mgpd.representations import (
    DYADIC_STEP,
    GeneratorLaw,
    SpectralLaw,
    cdf_r,
    cdf_t,
    cdf_u,
    extract_pi_ell,
    pi_ell_from_u,
    sample_standard,
    simulate_gp,
    spectral_from_pi_ell,
    spectral_from_t,
    spectral_from_u,
    u_from_r,
)
from mgpd.stdf import CompleteDependence, DNormMonteCarlo, Independence, Logistic
from oracles import gumbel_t_pi


def gumbel_t(d=2):
    return GeneratorLaw("T", d, lambda rng, n: rng.gumbel(size=(n, d)), name="gumbel")


def logistic_u(d, theta):
    return GeneratorLaw("U", d, lambda rng, n: -theta * np.log(rng.standard_exponential((n, d))),
                        name="logistic")


def test_gumbel_t_pi_and_extremal_coefficient():
    pi, ell = extract_pi_ell(spectral_from_t(gumbel_t()), 400_000, seed=1)
    target = gumbel_t_pi()
    assert_allclose(target, np.log(2), rtol=1e-10)
    # binomial-type bound on E[exp(S_j)] in [0, 1]
    assert np.all(np.abs(pi - target) < 3 * 0.5 / np.sqrt(400_000))
    assert_allclose(ell([1.0, 1.0]), 1 / np.log(2), rtol=5e-3)
    assert_allclose(ell(pi), 1.0, rtol=1e-10)


@pytest.mark.parametrize("theta", [0.25, 0.4])
def test_pi_ell_from_logistic_u(theta):
    pi, ell = pi_ell_from_u(logistic_u(2, theta), 400_000, seed=2)
    assert_allclose(pi, 2.0**-theta, rtol=1e-2)
    val, se = ell.evaluate_with_se([1.0, 1.0])
    assert abs(val - 2.0**theta) < 4 * se


@pytest.mark.parametrize(
    "ell, pi",
    [
        (Independence(3), [0.2, 0.3, 0.5]),
        (CompleteDependence(3), [1.0, 0.5, 0.8]),
        (Logistic(3, 0.5), None),
        (Logistic(2, 0.2), None),
    ],
)
def test_spectral_law_round_trip(ell, pi):
    if pi is None:
        pi = GpParams.from_tau(np.ones(ell.dim), np.zeros(ell.dim), np.arange(1, ell.dim + 1), ell).pi
    s = spectral_from_pi_ell(pi, ell)
    draws = s.sample(200_000, seed=5)
    assert np.all(draws.max(axis=1) == 0.0)
    pi_hat, ell_hat = extract_pi_ell(s, 200_000, seed=5)
    assert np.all(np.abs(pi_hat - pi) < 4 * 0.5 / np.sqrt(200_000) + 1e-12)
    y = np.linspace(0.5, 1.5, ell.dim)
    val, se = ell_hat.evaluate_with_se(y)
    assert abs(val - ell(y)) < 4 * se + 1e-10


def test_spectral_from_dnorm_sample():
    ell = DNormMonteCarlo.from_generator("lognormal", 2, 5000, seed=9)
    pi = np.array([1.0, 1.0]) / ell([1.0, 1.0])
    s = spectral_from_pi_ell(pi, ell)
    draws = s.sample(100_000, seed=1)
    assert_allclose(np.exp(draws).mean(axis=0), pi, atol=4 * 0.5 / np.sqrt(100_000))


def test_spectral_requires_constraint():
    with pytest.raises(DomainError):
        spectral_from_pi_ell([0.9, 0.9], Logistic(2, 0.5))


def test_spectral_contract_violations():
    bad = SpectralLaw(2, lambda rng, n: rng.normal(size=(n, 2)))
    with pytest.raises(ContractError):
        bad.sample(10, seed=0)
    shape = SpectralLaw(2, lambda rng, n: np.zeros((n, 3)))
    with pytest.raises(ContractError):
        shape.sample(10, seed=0)
    all_neg_inf = GeneratorLaw("T", 2, lambda rng, n: np.full((n, 2), -np.inf))
    with pytest.raises(ContractError):
        spectral_from_t(all_neg_inf).sample(5, seed=0)
    with pytest.raises(ContractError):
        all_neg_inf.check_conditions(100, seed=0)


def test_generator_conditions():
    rep = gumbel_t().check_conditions(1000, seed=0)
    assert rep["finite_fraction"] == [1.0, 1.0]
    rep = logistic_u(2, 0.3).check_conditions(10_000, seed=0)
    # E[exp(U_j)] = E[E^(-theta)] = Gamma(1 - theta)
    assert_allclose(rep["mean_exp"], special.gamma(0.7), rtol=0.05)
    with pytest.raises(DomainError):
        GeneratorLaw("Q", 2, lambda rng, n: None)
    with pytest.raises(DomainError):
        GeneratorLaw("R", 2, lambda rng, n: None)


def test_sir_metadata_and_low_ess():
    s = spectral_from_u(logistic_u(2, 0.3), pool_size=20_000)
    s.sample(100, seed=1)
    assert s.metadata["pool"] == 20_000 and s.metadata["ess"] > 2000
    assert not s.metadata["low_ess"]
    heavy = GeneratorLaw("U", 2, lambda rng, n: 30 * rng.standard_normal((n, 2)))
    h = spectral_from_u(heavy, pool_size=10_000)
    h.sample(10, seed=1)
    assert h.metadata["low_ess"]


def test_sample_standard_recovery_is_exact():
    s = spectral_from_pi_ell([2**-0.5, 2**-0.5], Logistic(2, 0.5))
    spec, e = sample_standard(s, 50_000, seed=3)
    z = spec + e[:, None]
    assert np.array_equal(z - z.max(axis=1, keepdims=True), spec)
    assert np.array_equal(z.max(axis=1), e)
    assert np.all(np.round(e / DYADIC_STEP) * DYADIC_STEP == e)


def test_simulation_is_reproducible_and_streams_differ():
    s = spectral_from_pi_ell([0.5, 0.5], Independence(2))
    a = simulate_gp([1, 1], [0.5, 0.0], s, 100, seed=4)
    b = simulate_gp([1, 1], [0.5, 0.0], s, 100, seed=4)
    c = simulate_gp([1, 1], [0.5, 0.0], s, 100, seed=4, stream=1)
    assert np.array_equal(a.data, b.data)
    assert not np.array_equal(a.data, c.data)
    # independence puts the non-maximal coordinate at the lower endpoint
    lows = np.sort(np.unique(np.concatenate([a.data[:, 0][a.data[:, 0] < 0], a.data[:, 1][a.data[:, 1] < 0]])))
    assert set(lows.tolist()) <= {-2.0, -np.inf}
    assert simulate_gp([1, 1], [0, 0], s, 0, seed=1).data.shape == (0, 2)


@pytest.mark.parametrize("z", [[0.5, 1.0], [-0.5, 2.0], [3.0, -1.0]])
def test_cdf_t_matches_gumbel_closed_form(z):
    pi = gumbel_t_pi()
    est = cdf_t(gumbel_t(), z, 200_000, seed=7)
    # the exact law is the (pi, ell) pair extracted on a large independent sample
    _, ell = extract_pi_ell(spectral_from_t(gumbel_t()), 400_000, seed=99)
    exact = std_cdf([pi, pi], ell, z)
    assert abs(est.value - exact) < 4 * est.se + 5e-3


@pytest.mark.parametrize("z", [[0.5, 1.0], [-0.5, 2.0], [3.0, -1.0], [1.0, 1.0]])
def test_cdf_u_matches_logistic(z):
    theta = 0.3
    est = cdf_u(logistic_u(2, theta), z, 400_000, seed=8)
    exact = std_cdf(np.full(2, 2.0**-theta), Logistic(2, theta), z)
    assert abs(est.value - exact) < 4 * est.se


def test_cdf_r_and_u_from_r_agree():
    theta = 0.3
    r = GeneratorLaw("R", 2, lambda rng, n: rng.standard_exponential((n, 2)) ** -theta,
                     sigma=[1.0, 1.0], gamma=[1.0, 1.0])
    x = np.array([0.6, 1.4])
    a = cdf_r(r, x, 400_000, seed=9)
    b = cdf_u(u_from_r(r), np.log1p(x), 400_000, seed=10)
    assert abs(a.value - b.value) < 4 * np.hypot(a.se, b.se)
    with pytest.raises(DomainError):
        cdf_r(r, [-2.0, 0.0], 10, seed=0)


def test_kind_checks():
    with pytest.raises(DomainError):
        spectral_from_t(logistic_u(2, 0.3))
    with pytest.raises(DomainError):
        spectral_from_u(gumbel_t())
    with pytest.raises(DomainError):
        cdf_u(gumbel_t(), [0.0, 0.0], 10, seed=0)
    with pytest.raises(DomainError):
        cdf_t(gumbel_t(), [np.nan, 0.0], 10, seed=0)
