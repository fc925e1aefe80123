"""Densities of GP laws and likelihood fitting.

Standardized densities (sigma = 1, gamma = 0) come from the generator
densities by one-dimensional integrals along the diagonal direction:

* T generator:  h(z) = exp(-max z) * int f_T(z + r) dr
* U generator:  h(z) = int exp(s) f_U(z + s) ds / E[exp(max U)]
* R generator:  h(x) = int f_R(e^(gamma s)(x + sigma/gamma)) e^(s (1 + sum gamma)) ds / norm
* spectral S:   h(z) = f_S(z - max z) exp(-max z)

all on {z not <= 0} and zero elsewhere; the first three integrals are the
``t``-integrals after the substitution ``t = e^s``. General (sigma, gamma)
densities follow by the change of variables in :func:`density_general`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import integrate, optimize

from ._numeric import as_float_array, check_support, log_scale
from .batch import SampleBatch
from .errors import DomainError, NumericalError


@dataclass(frozen=True)
class QuadratureConfig:
    rel_tol: float = 1e-8
    abs_tol: float = 1e-12
    max_subdivisions: int = 200


DEFAULT_QUADRATURE = QuadratureConfig()

# half-width and resolution of the grid used to locate the integrand's mode
_MODE_HALF_WIDTH = 40.0
_MODE_POINTS = 81


def _locate_mode(func, guess: float) -> float:
    grid = guess + np.linspace(-_MODE_HALF_WIDTH, _MODE_HALF_WIDTH, _MODE_POINTS)
    vals = np.array([func(r) for r in grid])
    if not np.any(vals > 0):
        return guess
    return float(grid[int(np.argmax(vals))])


def _line_integral(func, guess: float, cfg: QuadratureConfig) -> float:
    """int_R func(r) dr, split at the integrand's mode into two half-lines."""
    mode = _locate_mode(func, guess)
    total, err_total = 0.0, 0.0
    for lo, hi in ((-np.inf, mode), (mode, np.inf)):
        val, err, info, *msg = integrate.quad(
            func, lo, hi, epsabs=cfg.abs_tol, epsrel=cfg.rel_tol,
            limit=cfg.max_subdivisions, full_output=1,
        )
        total += val
        err_total += err
    if err_total > max(cfg.abs_tol, cfg.rel_tol * abs(total)) * 100:
        raise NumericalError(
            "adaptive quadrature did not reach the requested tolerance",
            value=total, error_estimate=err_total,
        )
    return total


def _rows(z, dim=None, name="z"):
    z = as_float_array(z, dim, name)
    if z.ndim == 0:
        raise DomainError(f"{name} must be a vector")
    return np.atleast_2d(z), z.ndim == 1


def _finish(out, single):
    return float(out[0]) if single else out


def density_std_t(f_T: Callable, z, quadrature: QuadratureConfig = DEFAULT_QUADRATURE):
    """Standardized GP density generated by a T law with joint density ``f_T``."""
    rows, single = _rows(z)
    out = np.zeros(rows.shape[0])
    for i, zz in enumerate(rows):
        top = zz.max()
        if top <= 0:
            continue
        integral = _line_integral(lambda r: float(f_T(zz + r)), -float(zz.mean()), quadrature)
        out[i] = np.exp(-top) * integral
    return _finish(out, single)


def density_std_u(f_U: Callable, norm: float, z,
                  quadrature: QuadratureConfig = DEFAULT_QUADRATURE):
    """Standardized GP density generated by a U law; ``norm`` = E[exp(max U)]."""
    if not norm > 0:
        raise DomainError(f"normalizing constant must be positive, got {norm}")
    rows, single = _rows(z)
    out = np.zeros(rows.shape[0])
    for i, zz in enumerate(rows):
        if zz.max() <= 0:
            continue

        def integrand(s, zz=zz):
            if not np.isfinite(s):
                return 0.0
            dens = float(f_U(zz + s))
            if dens == 0.0:
                return 0.0
            with np.errstate(over="ignore"):
                val = np.exp(s) * dens
            return float(val) if np.isfinite(val) else 0.0

        out[i] = _line_integral(integrand, -float(zz.mean()), quadrature) / norm
    return _finish(out, single)


def density_r(f_R: Callable, sigma, gamma, norm: float, x,
              quadrature: QuadratureConfig = DEFAULT_QUADRATURE):
    """GP density (original scale) of the R construction.

    ``norm`` is E[max_j (gamma_j R_j / sigma_j)^(1/gamma_j)].
    """
    rows, single = _rows(x, name="x")
    d = rows.shape[1]
    sigma = as_float_array(sigma, d, "sigma")
    gamma = as_float_array(gamma, d, "gamma")
    if np.any(gamma <= 0) or np.any(sigma <= 0):
        raise DomainError("the R construction needs positive sigma and gamma")
    if not norm > 0:
        raise DomainError(f"normalizing constant must be positive, got {norm}")
    check_support(rows, sigma, gamma, allow_boundary=False)
    power = 1.0 + gamma.sum()
    out = np.zeros(rows.shape[0])
    for i, xx in enumerate(rows):
        if xx.max() <= 0:
            continue
        base = xx + sigma / gamma

        def integrand(s, base=base):
            if not np.isfinite(s):
                return 0.0
            with np.errstate(over="ignore"):
                arg = np.exp(gamma * s) * base
                scale = np.exp(power * s)
            if not np.all(np.isfinite(arg)) or not np.isfinite(scale):
                return 0.0
            return float(f_R(arg) * scale)

        out[i] = _line_integral(integrand, 0.0, quadrature) / norm
    return _finish(out, single)


def density_std_s(f_S: Callable, z):
    """Standardized GP density from a spectral density on {max(s) = 0}."""
    rows, single = _rows(z)
    top = rows.max(axis=1)
    out = np.zeros(rows.shape[0])
    pos = top > 0
    for i in np.flatnonzero(pos):
        out[i] = float(f_S(rows[i] - top[i])) * np.exp(-top[i])
    return _finish(out, single)


def density_general(sigma, gamma, std_density: Callable, x):
    """h_X(x) = h_Z(log(1 + gamma x / sigma) / gamma) / prod(sigma + gamma x)."""
    rows, single = _rows(x, name="x")
    d = rows.shape[1]
    sigma = as_float_array(sigma, d, "sigma")
    gamma = as_float_array(gamma, d, "gamma")
    check_support(rows, sigma, gamma, allow_boundary=False)
    z = log_scale(rows, sigma, gamma)
    hz = np.atleast_1d(np.asarray(std_density(z), dtype=float))
    out = hz / np.prod(sigma + gamma * rows, axis=1)
    return _finish(out, single)


@dataclass
class DensityModel:
    """A density built from one of the four generator descriptions.

    ``kind`` is one of ``"T"``, ``"U"``, ``"R"``, ``"S"``; ``norm`` is needed
    for U and R; ``sigma`` and ``gamma`` for R. Calling the model evaluates the
    standardized density (or, for R, the density on the original scale).
    """

    kind: str
    f: Callable
    norm: Optional[float] = None
    sigma: Optional[np.ndarray] = None
    gamma: Optional[np.ndarray] = None
    norm_se: Optional[float] = None
    quadrature: QuadratureConfig = field(default_factory=QuadratureConfig)

    def __call__(self, z):
        if self.kind == "T":
            return density_std_t(self.f, z, self.quadrature)
        if self.kind == "U":
            return density_std_u(self.f, self.norm, z, self.quadrature)
        if self.kind == "R":
            return density_r(self.f, self.sigma, self.gamma, self.norm, z, self.quadrature)
        if self.kind == "S":
            return density_std_s(self.f, z)
        raise DomainError(f"unknown density kind {self.kind!r}")


# -- closed-form logistic GP density ------------------------------------------------


def logistic_std_logpdf(z, theta: float, pi) -> np.ndarray:
    """log-density of GP(1, 0, pi, logistic(theta)) on {z not <= 0}.

    Equals log of (-1)^(d+1) d^d/dz ell(pi exp(-z)):
    h(z) = theta^(1-d) prod_{k<d} (k - theta) s^(theta - d) prod_j y_j^(1/theta),
    y = pi exp(-z), s = sum_j y_j^(1/theta).
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    d = z.shape[1]
    logy = np.log(np.asarray(pi, dtype=float)) - z
    if theta >= 1.0:
        # independence: no mass off the coordinate axes
        return np.full(z.shape[0], -np.inf)
    u = logy / theta
    top = u.max(axis=1)
    logs = top + np.log(np.exp(u - top[:, None]).sum(axis=1))
    const = (1 - d) * np.log(theta) + np.sum(np.log(np.arange(1, d) - theta))
    out = const + (theta - d) * logs + u.sum(axis=1)
    return np.where(z.max(axis=1) > 0, out, -np.inf)


# -- likelihood fitting ---------------------------------------------------------------


class DensityFamily:
    """A parametric family: natural <-> unconstrained maps and a log-likelihood."""

    names: tuple = ()

    def to_free(self, params: dict) -> np.ndarray:
        raise NotImplementedError

    def from_free(self, free) -> dict:
        raise NotImplementedError

    def loglik(self, params: dict, data: np.ndarray) -> float:
        raise NotImplementedError

    def flat(self, params: dict) -> np.ndarray:
        return np.concatenate([np.atleast_1d(params[k]) for k in self.names]).astype(float)

    def unflat(self, vec) -> dict:
        raise NotImplementedError


def _gp_margin_terms(x, sigma, gamma):
    """log Jacobian and standardized values; None outside the support."""
    lin = sigma + gamma * x
    if np.any(lin <= 0) or np.any(~np.isfinite(x)):
        return None
    z = log_scale(x, sigma, gamma)
    return z, -np.log(lin).sum(axis=1)


class UnivariateGP(DensityFamily):
    """Univariate GP(sigma, gamma): density (1/sigma)(1 + gamma x/sigma)^(-1/gamma - 1), x > 0."""

    names = ("sigma", "gamma")

    def to_free(self, params):
        return np.array([np.log(params["sigma"]), params["gamma"]], dtype=float)

    def from_free(self, free):
        return {"sigma": float(np.exp(free[0])), "gamma": float(free[1])}

    def unflat(self, vec):
        return {"sigma": float(vec[0]), "gamma": float(vec[1])}

    def loglik(self, params, data):
        x = np.asarray(data, dtype=float).reshape(-1, 1)
        if np.any(x <= 0):
            return -np.inf
        terms = _gp_margin_terms(x, params["sigma"], params["gamma"])
        if terms is None:
            return -np.inf
        z, logjac = terms
        return float(np.sum(-z[:, 0] + logjac))


class LogisticGP(DensityFamily):
    """d-variate GP with logistic stdf, free margins and fixed ``tau`` (default all ones)."""

    names = ("sigma", "gamma", "theta")

    def __init__(self, dim: int, tau=None):
        self.dim = int(dim)
        tau = np.ones(self.dim) if tau is None else np.asarray(tau, dtype=float)
        self.tau = tau

    def pi(self, theta):
        return self.tau / np.sum(self.tau ** (1.0 / theta)) ** theta

    def initial(self, data, theta: float = 0.5) -> dict:
        """Starting values: univariate GP fits to the positive part of each margin."""
        x = _data_array(data)
        sigma, gamma = np.empty(self.dim), np.empty(self.dim)
        for j in range(self.dim):
            pos = x[:, j][x[:, j] > 0]
            fit = fit_mle(pos, UnivariateGP(), {"sigma": float(np.mean(pos)), "gamma": 0.0})
            sigma[j], gamma[j] = fit.params["sigma"], fit.params["gamma"]
        return {"sigma": sigma, "gamma": gamma, "theta": theta}

    def to_free(self, params):
        th = float(params["theta"])
        return np.concatenate([np.log(params["sigma"]), params["gamma"],
                               [np.log(th / (1.0 - th))]]).astype(float)

    def from_free(self, free):
        d = self.dim
        return {
            "sigma": np.exp(free[:d]),
            "gamma": np.asarray(free[d:2 * d], dtype=float),
            "theta": float(1.0 / (1.0 + np.exp(-free[2 * d]))),
        }

    def unflat(self, vec):
        d = self.dim
        return {"sigma": np.asarray(vec[:d]), "gamma": np.asarray(vec[d:2 * d]),
                "theta": float(vec[2 * d])}

    def loglik(self, params, data):
        x = np.asarray(data, dtype=float)
        theta = params["theta"]
        if not 0 < theta < 1:
            return -np.inf
        terms = _gp_margin_terms(x, np.asarray(params["sigma"]), np.asarray(params["gamma"]))
        if terms is None:
            return -np.inf
        z, logjac = terms
        return float(np.sum(logistic_std_logpdf(z, theta, self.pi(theta)) + logjac))


@dataclass
class FitResult:
    params: dict
    loglik: float
    iterations: int
    converged: bool
    trace: list

    def to_dict(self) -> dict:
        return {
            "params": {k: np.asarray(v).tolist() for k, v in self.params.items()},
            "loglik": self.loglik,
            "iterations": self.iterations,
            "converged": self.converged,
        }


def _data_array(data) -> np.ndarray:
    if isinstance(data, SampleBatch):
        data = data.data
    data = np.asarray(data, dtype=float)
    if np.any(~np.isfinite(data)):
        raise DomainError("likelihood fitting needs finite observations (no atoms)")
    return data


def fit_mle(data, family: DensityFamily, init: dict, *, max_iter: int = 4000,
            max_restarts: int = 8, tol: float = 1e-8) -> FitResult:
    """Maximize the log-likelihood by Nelder-Mead simplex descent with restarts.

    Each restart begins at the best point so far; the fit is declared
    converged when a restart improves the log-likelihood by less than ``tol``.
    The per-restart log-likelihood trace is non-decreasing.
    """
    x = _data_array(data)
    start = family.to_free(init)
    ll0 = family.loglik(family.from_free(start), x)
    if not np.isfinite(ll0):
        raise DomainError("log-likelihood is not finite at the initial parameters")

    def objective(free):
        ll = family.loglik(family.from_free(free), x)
        return -ll if np.isfinite(ll) else np.inf

    best, best_ll = start, ll0
    trace = [ll0]
    iterations = 0
    converged = False
    for _ in range(max_restarts):
        res = optimize.minimize(objective, best, method="Nelder-Mead",
                                options={"maxiter": max_iter, "xatol": 1e-10,
                                         "fatol": tol, "adaptive": len(best) > 3})
        iterations += int(res.nit)
        ll = -float(res.fun)
        improvement = ll - best_ll
        if ll >= best_ll:
            best, best_ll = res.x, ll
        trace.append(best_ll)
        if res.success and improvement < tol:
            converged = True
            break
    if not converged:
        raise NumericalError("simplex descent hit the iteration cap without converging",
                             params=family.from_free(best), loglik=best_ll, trace=trace)
    return FitResult(family.from_free(best), best_ll, iterations, converged, trace)


def standard_errors(family: DensityFamily, params: dict, data, rel_step: float = 1e-4):
    """Standard errors in natural parameters from the observed information
    (central finite-difference Hessian of the log-likelihood)."""
    x = _data_array(data)
    p0 = family.flat(params)
    k = p0.size
    steps = rel_step * np.maximum(1.0, np.abs(p0))

    def f(p):
        return family.loglik(family.unflat(p), x)

    hess = np.empty((k, k))
    for i in range(k):
        for j in range(i, k):
            ei = np.zeros(k)
            ej = np.zeros(k)
            ei[i] = steps[i]
            ej[j] = steps[j]
            val = (f(p0 + ei + ej) - f(p0 + ei - ej) - f(p0 - ei + ej) + f(p0 - ei - ej))
            hess[i, j] = hess[j, i] = val / (4 * steps[i] * steps[j])
    cov = np.linalg.inv(-hess)
    return family.unflat(np.sqrt(np.diag(cov)))
