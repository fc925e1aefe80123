"""Margins, lower-boundary atoms, exceedance identities, thresholding and linear combinations.

Index arguments are 0-based throughout.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from ._numeric import as_float_array, check_support, log_scale, tail_factor, weighted_sum
from .batch import SampleBatch
from .errors import DomainError, NumericalError
from .montecarlo import Estimate, mean_estimate, ratio_estimate
from .params import GpParams, MarginalEndpoints, marginal_survival
from .representations import GeneratorLaw, SpectralLaw, _tilted_weights
from .stdf import DNormMonteCarlo

#: epsilon ladder 2^-k for the scaling limit of the atom mass
ATOM_EPS_POWERS = range(4, 21)
ATOM_TOL = 1e-6


def _index(j, dim) -> int:
    j = int(j)
    if not 0 <= j < dim:
        raise DomainError(f"index {j} out of range for dimension {dim}")
    return j


# -- margins and atoms --------------------------------------------------------------


def margin_cdf(h: GpParams, j: int, x: float) -> float:
    """H_j(x) = ell(pi_1, ..., pi_j exp(-(z ^ 0)), ..., pi_d) - pi_j exp(-z).

    ``z = log(1 + gamma_j x / sigma_j) / gamma_j``; for x >= 0 this is
    1 - pi_j (1 + gamma_j x / sigma_j)^(-1/gamma_j). At the lower endpoint the
    value is the right limit, i.e. the atom mass there.
    """
    j = _index(j, h.dim)
    x = float(x)
    s, g = h.sigma[j], h.gamma[j]
    if not s + g * x >= 0:
        raise DomainError(f"x = {x} outside the support of margin {j} "
                          f"(sigma_j + gamma_j x = {s + g * x:.6g})")
    z = float(log_scale(x, s, g))
    if z >= 0:
        return 1.0 - h.pi[j] * np.exp(-z)
    y = h.pi.copy()
    yj = h.pi[j] * np.exp(-z)
    if not np.isfinite(yj):
        mask = np.zeros(h.dim, dtype=bool)
        mask[j] = True
        return float(h.ell.infinite_limit(np.where(mask, 0.0, y), mask))
    y[j] = yj
    return float(np.clip(h.ell(y) - yj, 0.0, 1.0))


def lower_endpoints(h: GpParams) -> MarginalEndpoints:
    """eta_j = -sigma_j / gamma_j when gamma_j > 0, else -inf."""
    with np.errstate(divide="ignore"):
        eta = np.where(h.gamma > 0, -h.sigma / np.where(h.gamma > 0, h.gamma, 1.0), -np.inf)
    return MarginalEndpoints(eta)


def _aitken(seq: list[float]) -> list[float]:
    out = []
    for a, b, c in zip(seq, seq[1:], seq[2:]):
        denom = (c - b) - (b - a)
        out.append(c - (c - b) ** 2 / denom if abs(denom) > 1e-14 else c)
    return out


def _iterated_aitken(seq: list[float]) -> float:
    """Last entry of the deepest Aitken delta-squared level with at least two entries."""
    level = list(seq)
    while len(level) >= 4:
        nxt = _aitken(level)
        if len(nxt) < 2 or not np.all(np.isfinite(nxt)):
            break
        level = nxt
    return level[-1]


def _atom_epsilon(h: GpParams, j: int) -> float:
    """eps^-1 {ell(eps pi_1, ..., pi_j, ..., eps pi_d) - pi_j} as eps -> 0.

    The raw quotients decrease monotonically (convexity of ell) but can
    converge slowly, like a power of eps; the ladder eps = 2^-k is therefore
    accelerated by iterated Aitken delta-squared steps, which remove
    geometric error terms one at a time.
    """
    raw = []
    est = []
    for k in ATOM_EPS_POWERS:
        eps = 2.0 ** -k
        y = eps * h.pi
        y[j] = h.pi[j]
        raw.append((float(h.ell(y)) - h.pi[j]) / eps)
        if len(raw) >= 3:
            est.append(_iterated_aitken(raw))
            if len(est) >= 2 and abs(est[-1] - est[-2]) < ATOM_TOL:
                return float(np.clip(est[-1], 0.0, 1.0))
    last = est[-2:] if len(est) >= 2 else raw[-2:]
    raise NumericalError("epsilon-limit for the atom mass did not converge",
                         last_iterates=[float(v) for v in last])


def _atom_gradient(h: GpParams, j: int) -> float:
    if isinstance(h.ell, DNormMonteCarlo):
        raise DomainError("no smoothness certificate for a Monte Carlo stdf; "
                          "use the epsilon or generator route")
    point = np.zeros(h.dim)
    point[j] = h.pi[j]
    grad = h.ell.gradient(point)
    others = np.arange(h.dim) != j
    return float(np.sum(h.pi[others] * grad[others]))


def _atom_generator(law, j: int, n_mc: int, seed: int, stream: int) -> Estimate:
    if isinstance(law, SpectralLaw):
        s = law.sample(n_mc, seed, stream)
        return mean_estimate(np.isneginf(s[:, j]).astype(float))
    if not isinstance(law, GeneratorLaw):
        raise DomainError("the generator route needs a SpectralLaw or GeneratorLaw")
    v = law.sample(n_mc, seed, stream)
    if law.kind == "T":
        return mean_estimate(np.isneginf(v[:, j]).astype(float))
    if law.kind == "U":
        w, _ = _tilted_weights(v)
        return ratio_estimate(w * np.isneginf(v[:, j]), w)
    # R-kind: U_j = -inf exactly when R_j = 0
    u = np.where(v > 0, np.log(np.where(v > 0, v, 1.0) * law.gamma / law.sigma) / law.gamma,
                 -np.inf)
    w, _ = _tilted_weights(u)
    return ratio_estimate(w * np.isneginf(u[:, j]), w)


def atom_mass(h: GpParams | None, j: int, route: str = "epsilon", *, law=None,
              n_mc: int = 100_000, seed: int | None = None, stream: int = 0):
    """Mass H_j({eta_j}) placed on the lower endpoint of margin ``j``.

    Routes: ``"epsilon"`` (scaling limit of ell), ``"gradient"`` (partial
    derivatives of ell at pi_j e_j) and ``"generator"`` (probability that the
    spectral / T / U coordinate equals -inf; returns an :class:`Estimate`).
    """
    if route == "generator":
        if law is None or seed is None:
            raise DomainError("the generator route needs a law and a seed")
        return _atom_generator(law, _index(j, law.dim), n_mc, seed, stream)
    if h is None:
        raise DomainError(f"route {route!r} needs GP parameters")
    j = _index(j, h.dim)
    if route == "epsilon":
        return _atom_epsilon(h, j)
    if route == "gradient":
        return _atom_gradient(h, j)
    raise DomainError(f"unknown atom route {route!r}")


# -- exceedance identities ------------------------------------------------------------


def exceedance_probs(h: GpParams, x) -> tuple[float, float]:
    """(P(some X_j > x_j), P(all X_j > x_j)) = (ell, R) of the marginal survivals."""
    x = as_float_array(x, h.dim)
    if x.ndim != 1:
        raise DomainError("x must be a single vector")
    surv = marginal_survival(h, x)
    return float(h.ell(surv)), float(h.ell.tail_copula(surv))


def constancy_diagnostic(batch: SampleBatch | np.ndarray, h: GpParams, p_grid) -> list[dict]:
    """Empirical P(some Hbar_j(X_j) < p) against p ell(1, ..., 1) on a grid of p.

    Marginal survivals Hbar_j are taken from the model ``h``; only
    p <= min(pi) is covered by the identity.
    """
    data = batch.data if isinstance(batch, SampleBatch) else np.asarray(batch, dtype=float)
    if data.shape[0] == 0:
        raise DomainError("empty batch")
    if data.shape[1] != h.dim:
        raise DomainError(f"batch has {data.shape[1]} columns, model has {h.dim}")
    n = data.shape[0]
    # Hbar_j(x) < p can only happen for x > 0, where Hbar_j = pi_j (1 + gamma x/sigma)^(-1/gamma)
    pos = np.maximum(data, 0.0)
    surv = np.where(data > 0, h.pi * tail_factor(pos, h.sigma, h.gamma), np.inf)
    ext = float(h.ell(np.ones(h.dim)))
    rows = []
    for p in np.atleast_1d(np.asarray(p_grid, dtype=float)):
        if not 0 < p <= h.pi.min():
            raise DomainError(f"p = {p} must lie in (0, min(pi)] = (0, {h.pi.min():.6g}]")
        hit = np.any(surv < p, axis=1)
        emp = float(hit.mean())
        se = float(np.sqrt(max(emp * (1 - emp), 1e-300) / n))
        rows.append({"p": float(p), "empirical": emp, "model": p * ext,
                     "ratio": emp / p, "se": se})
    return rows


# -- thresholding ------------------------------------------------------------------------


@dataclass(frozen=True)
class ConditionalSpec:
    """Coordinates ``J`` (0-based) and thresholds ``u >= 0`` on them."""

    J: tuple
    u: np.ndarray

    def __init__(self, J, u):
        J = tuple(int(j) for j in np.atleast_1d(J))
        if not J:
            raise DomainError("J must be nonempty")
        if len(set(J)) != len(J):
            raise DomainError("J has repeated indices")
        u = np.array(u, dtype=float, ndmin=1)
        if u.shape != (len(J),):
            raise DomainError(f"u has shape {u.shape}, expected ({len(J)},)")
        if np.any(u < 0) or np.any(~np.isfinite(u)):
            raise DomainError("thresholds u must be finite and nonnegative")
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "u", u)


def conditional_excess(h: GpParams, spec: ConditionalSpec) -> GpParams:
    """Law of X_J - u given X_J not <= u:
    GP(sigma_J + gamma_J u, gamma_J, P[X_j > u_j | X_J not <= u], ell_J)."""
    J = [_index(j, h.dim) for j in spec.J]
    sigma, gamma, pi = h.sigma[J], h.gamma[J], h.pi[J]
    check_support(spec.u, sigma, gamma)
    tau = pi * tail_factor(spec.u, sigma, gamma)
    zero = np.flatnonzero(tau <= 0)
    if zero.size:
        raise DomainError(f"P[X_j > u_j] = 0 for coordinates {[J[k] for k in zero]}")
    return GpParams.from_tau(sigma + gamma * spec.u, gamma, tau, h.ell.marginal(J))


# -- linear combinations ------------------------------------------------------------------


@dataclass(frozen=True)
class CombinationSpec:
    """Nonnegative m x d coefficient matrix ``A``."""

    A: np.ndarray

    def __post_init__(self):
        A = np.array(self.A, dtype=float, ndmin=2)
        if A.ndim != 2:
            raise DomainError("A must be a matrix")
        if np.any(A < 0) or np.any(~np.isfinite(A)):
            raise DomainError("A must have finite nonnegative entries")
        A.setflags(write=False)
        object.__setattr__(self, "A", A)

    def scales(self, sigma) -> np.ndarray:
        """A_i sigma for each row; every one must be positive."""
        s = self.A @ np.asarray(sigma, dtype=float)
        bad = np.flatnonzero(s <= 0)
        if bad.size:
            raise DomainError(f"rows {bad.tolist()} have A_i sigma = 0")
        return s

    def weights(self, sigma) -> np.ndarray:
        """p_ij = a_ij sigma_j / A_i sigma; rows sum to one."""
        return self.A * np.asarray(sigma, dtype=float) / self.scales(sigma)[:, None]


def combination_u(s: np.ndarray, p: np.ndarray, gamma: float) -> np.ndarray:
    """U_i = log(sum_j p_ij exp(gamma S_j)) / gamma, or sum_j p_ij S_j at gamma = 0.

    Terms with p_ij = 0 are left out even where S_j = -inf.
    """
    s = np.atleast_2d(s)
    if abs(gamma) < 1e-12:
        return weighted_sum(p, s)
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.log(p)[None, :, :] + gamma * s[:, None, :]
    terms = np.where(p[None, :, :] > 0, terms, -np.inf)
    with np.errstate(divide="ignore"):
        return logsumexp(terms, axis=2) / gamma


@dataclass
class CombinationResult:
    """Survival function of AX and the conditional law of AX given AX not <= 0."""

    survival: callable
    conditional_law: GeneratorLaw
    scales: np.ndarray
    gamma: float


def linear_combination(h: GpParams, spectral: SpectralLaw, spec: CombinationSpec, *,
                       n_mc: int = 200_000, seed: int, stream: int = 0) -> CombinationResult:
    """Joint exceedance law of AX for X ~ GP with spectral law ``spectral`` and a common gamma.

    ``survival(x)`` returns an Estimate of P(AX not <= x) =
    E[1 ^ max_i (1 + gamma x_i / A_i sigma)^(-1/gamma) exp(U_i)], computed on
    a frozen spectral sample; the conditional law is GPU(A sigma, gamma, law(U)).
    """
    if spectral.dim != h.dim:
        raise DomainError("spectral law and parameters differ in dimension")
    if not np.all(h.gamma == h.gamma[0]):
        raise DomainError("linear combinations need equal shape parameters in all margins")
    if spec.A.shape[1] != h.dim:
        raise DomainError(f"A has {spec.A.shape[1]} columns, expected {h.dim}")
    gamma = float(h.gamma[0])
    scales = spec.scales(h.sigma)
    p = spec.weights(h.sigma)
    u = combination_u(spectral.sample(n_mc, seed, stream), p, gamma)
    never = np.flatnonzero(np.all(np.isneginf(u), axis=0))
    if never.size:
        raise DomainError(f"rows {never.tolist()} have P[A_i X > 0] = 0 on the sample")
    m = p.shape[0]
    eu = np.exp(u)

    def survival(x):
        x = as_float_array(x, m)
        rows = np.atleast_2d(x)
        check_support(rows, scales, np.full(m, gamma), allow_boundary=False)
        out = []
        for xx in rows:
            c = tail_factor(xx, scales, gamma)
            out.append(mean_estimate(np.minimum(1.0, (c * eu).max(axis=1))))
        return out[0] if x.ndim == 1 else out

    def sampler(rng, n):
        return combination_u(spectral.draw(rng, n), p, gamma)

    law = GeneratorLaw("U", m, sampler, name=f"linear combination of {spectral.name}")
    return CombinationResult(survival, law, scales, gamma)
