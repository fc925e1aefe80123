"""Parametrizations of multivariate GP laws and their closed-form cdfs.

A GP law is handled through :class:`GpParams`, i.e. marginal scales ``sigma``,
shapes ``gamma``, exceedance probabilities ``pi`` (with ``ell(pi) = 1``) and an
stdf ``ell``. The equivalent ``tau`` vector (identifiable up to scale) is
stored normalized to ``sum(tau) = d``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._numeric import (
    GAMMA_ZERO_TOL,
    as_float_array,
    check_support,
    exp_scale,
    log_scale,
    tail_factor,
)
from .errors import DomainError
from .stdf import StdfModel, stdf_from_dict

#: tolerance on the constraint ell(pi) = 1
PI_CONSTRAINT_TOL = 1e-10


def _vec(x, name, dim=None):
    arr = np.array(x, dtype=float, ndmin=1)
    if arr.ndim != 1:
        raise DomainError(f"{name} must be a vector")
    if dim is not None and arr.shape[0] != dim:
        raise DomainError(f"{name} has length {arr.shape[0]}, expected {dim}")
    if np.any(np.isnan(arr)):
        raise DomainError(f"{name} contains nan")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class GevParams:
    """GEV law with margins GEV(mu_j, gamma_j, alpha_j) and stdf ``ell``."""

    mu: np.ndarray
    gamma: np.ndarray
    alpha: np.ndarray
    ell: StdfModel

    def __post_init__(self):
        d = self.ell.dim
        object.__setattr__(self, "mu", _vec(self.mu, "mu", d))
        object.__setattr__(self, "gamma", _vec(self.gamma, "gamma", d))
        object.__setattr__(self, "alpha", _vec(self.alpha, "alpha", d))
        bad = np.flatnonzero(self.alpha <= 0)
        if bad.size:
            raise DomainError(f"alpha must be positive; offending coordinates {bad.tolist()}")

    @property
    def dim(self) -> int:
        return self.ell.dim

    @property
    def sigma(self) -> np.ndarray:
        return self.alpha - self.gamma * self.mu

    def to_dict(self) -> dict:
        return {
            "mu": self.mu.tolist(),
            "gamma": self.gamma.tolist(),
            "alpha": self.alpha.tolist(),
            "stdf": self.ell.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GevParams":
        for key in ("mu", "gamma", "alpha", "stdf"):
            if key not in d:
                raise DomainError(f"GEV specification is missing field {key!r}")
        return cls(d["mu"], d["gamma"], d["alpha"], stdf_from_dict(d["stdf"]))


@dataclass(frozen=True, eq=False)
class GpParams:
    """GP(sigma, gamma, pi, ell); build with :meth:`from_pi` or :meth:`from_tau`."""

    sigma: np.ndarray
    gamma: np.ndarray
    pi: np.ndarray
    tau: np.ndarray
    ell: StdfModel

    def __post_init__(self):
        d = self.ell.dim
        for name in ("sigma", "gamma", "pi", "tau"):
            object.__setattr__(self, name, _vec(getattr(self, name), name, d))
        bad = np.flatnonzero(self.sigma <= 0)
        if bad.size:
            raise DomainError(f"sigma must be positive; offending coordinates {bad.tolist()}")
        if np.any(self.pi <= 0) or np.any(self.pi > 1 + PI_CONSTRAINT_TOL):
            raise DomainError(f"pi must lie in (0, 1], got {self.pi.tolist()}")
        if np.any(self.tau <= 0):
            raise DomainError("tau must be positive")
        gap = abs(self.ell(self.pi) - 1.0)
        if gap > PI_CONSTRAINT_TOL:
            raise DomainError(f"constraint ell(pi) = 1 violated by {gap:.3g}")

    @classmethod
    def from_pi(cls, sigma, gamma, pi, ell: StdfModel) -> "GpParams":
        pi = _vec(pi, "pi", ell.dim)
        tau = pi * ell.dim / pi.sum()
        return cls(sigma, gamma, pi, tau, ell)

    @classmethod
    def from_tau(cls, sigma, gamma, tau, ell: StdfModel) -> "GpParams":
        tau = _vec(tau, "tau", ell.dim)
        if np.any(tau <= 0):
            raise DomainError("tau must be positive")
        pi = tau / ell(tau)
        return cls(sigma, gamma, pi, tau * ell.dim / tau.sum(), ell)

    @property
    def dim(self) -> int:
        return self.ell.dim

    def to_dict(self) -> dict:
        return {
            "sigma": self.sigma.tolist(),
            "gamma": self.gamma.tolist(),
            "pi": self.pi.tolist(),
            "tau": self.tau.tolist(),
            "stdf": self.ell.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GpParams":
        for key in ("sigma", "gamma", "stdf"):
            if key not in d:
                raise DomainError(f"GP specification is missing field {key!r}")
        ell = stdf_from_dict(d["stdf"])
        if "pi" in d:
            return cls.from_pi(d["sigma"], d["gamma"], d["pi"], ell)
        if "tau" in d:
            return cls.from_tau(d["sigma"], d["gamma"], d["tau"], ell)
        raise DomainError("GP specification needs either 'pi' or 'tau'")

    def __repr__(self):
        return (f"GpParams(sigma={self.sigma.tolist()}, gamma={self.gamma.tolist()}, "
                f"pi={self.pi.tolist()}, ell={self.ell!r})")


@dataclass(frozen=True)
class MarginalEndpoints:
    """Lower endpoints eta_j of the margins (-inf when gamma_j <= 0)."""

    eta: np.ndarray


def gev_to_gp(g: GevParams) -> GpParams:
    """The GP law generated by the GEV law ``g``."""
    sigma = g.sigma
    bad = np.flatnonzero(sigma <= 0)
    if bad.size:
        raise DomainError(
            f"sigma = alpha - gamma mu must be positive; offending coordinates {bad.tolist()}"
        )
    # tau_j = -log G_j(0) = (1 - gamma mu / alpha)^(-1/gamma), exp(mu/alpha) at gamma = 0
    tau = tail_factor(-g.mu, g.alpha, g.gamma)
    return GpParams.from_tau(sigma, g.gamma, tau, g.ell)


def gev_orbit(g: GevParams, t: float) -> GevParams:
    """Parameters of ``G^t``: mu + alpha (t^gamma - 1)/gamma and t^gamma alpha."""
    t = float(t)
    if not t > 0:
        raise DomainError(f"t must be positive, got {t}")
    logt = np.log(t)
    zero = np.abs(g.gamma) < GAMMA_ZERO_TOL
    gs = np.where(zero, 1.0, g.gamma)
    shift = np.where(zero, logt, np.expm1(gs * logt) / gs)
    mu_t = g.mu + g.alpha * shift
    alpha_t = g.alpha * np.exp(np.where(zero, 0.0, g.gamma) * logt)
    return GevParams(mu_t, g.gamma, alpha_t, g.ell)


def standardize(h: GpParams, x) -> np.ndarray:
    """Map x to the standard scale: z = log(1 + gamma x / sigma) / gamma."""
    x = as_float_array(x, h.dim)
    check_support(x, h.sigma, h.gamma)
    return log_scale(x, h.sigma, h.gamma)


def unstandardize(h: GpParams, z) -> np.ndarray:
    """Inverse of :func:`standardize`: x = sigma (exp(gamma z) - 1) / gamma."""
    z = as_float_array(z, h.dim)
    return exp_scale(z, h.sigma, h.gamma)


def _ell_difference(ell: StdfModel, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """ell(a) - ell(b) row-wise, with +inf entries (shared by a and b) handled
    by the right-continuity limit."""
    out = np.empty(a.shape[0])
    inf_rows = np.any(np.isinf(a), axis=1)
    fin = ~inf_rows
    if fin.any():
        out[fin] = np.atleast_1d(ell(a[fin])) - np.atleast_1d(ell(b[fin]))
    for i in np.flatnonzero(inf_rows):
        mask = np.isinf(a[i])
        ya = np.where(mask, 0.0, a[i])
        yb = np.where(mask, 0.0, np.where(np.isinf(b[i]), 0.0, b[i]))
        out[i] = ell.infinite_limit(ya, mask) - ell.infinite_limit(yb, mask)
    return out


def std_cdf(pi, ell: StdfModel, z) -> np.ndarray | float:
    """cdf of GP(1, 0, pi, ell): ell(pi exp(-(z ^ 0))) - ell(pi exp(-z))."""
    pi = _vec(pi, "pi", ell.dim)
    z = as_float_array(z, ell.dim, "z")
    rows = np.atleast_2d(z)
    with np.errstate(over="ignore"):
        a = pi * np.exp(-np.minimum(rows, 0.0))
        b = pi * np.exp(-rows)
    val = np.clip(_ell_difference(ell, a, b), 0.0, 1.0)
    return float(val[0]) if z.ndim == 1 else val


def gp_cdf(h: GpParams, x) -> np.ndarray | float:
    """Joint cdf H(x) of GP(sigma, gamma, pi, ell).

    Points on the lower support boundary (sigma_j + gamma_j x_j = 0) are
    evaluated by right-continuity. Values are clipped to [0, 1] to absorb
    rounding in the difference of the two stdf terms.
    """
    x = as_float_array(x, h.dim)
    check_support(x, h.sigma, h.gamma)
    rows = np.atleast_2d(x)
    a = h.pi * tail_factor(np.minimum(rows, 0.0), h.sigma, h.gamma)
    b = h.pi * tail_factor(rows, h.sigma, h.gamma)
    val = np.clip(_ell_difference(h.ell, a, b), 0.0, 1.0)
    return float(val[0]) if x.ndim == 1 else val


def marginal_survival(h: GpParams, x) -> np.ndarray:
    """P(X_j > x_j) = pi_j (1 + gamma_j x_j / sigma_j)^(-1/gamma_j) for x >= 0."""
    x = as_float_array(x, h.dim)
    if np.any(x < 0):
        raise DomainError("marginal survival formula holds for x >= 0 only")
    check_support(x, h.sigma, h.gamma)
    return h.pi * tail_factor(x, h.sigma, h.gamma)


def joint_survival(h: GpParams, x) -> np.ndarray | float:
    """P(X not <= x) = ell(P(X_1 > x_1), ..., P(X_d > x_d)) for x >= 0."""
    x = as_float_array(x, h.dim)
    return h.ell(marginal_survival(h, x))
