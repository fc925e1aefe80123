"""Stochastic representations of GP laws: spectral vectors and T/U/R generators.

A standardized GP vector is ``Z = S + E`` with ``S`` a spectral vector
(``max(S) = 0``, every coordinate finite with positive probability) and ``E``
unit exponential; ``X = sigma (exp(gamma Z) - 1) / gamma`` then has the
general law. Spectral vectors are obtained from a generator ``T`` by
max-shifting, from ``U`` by exponential tilting, and ``R`` generators are
mapped to ``U`` by ``U = log(gamma R / sigma) / gamma``.

Samplers are callables ``sampler(rng, n) -> ndarray (n, d)``; public
``sample`` methods take ``(n, seed, stream)`` and are reproducible given those.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ._numeric import as_float_array, exp_scale, rng_for, shift_by_max
from .batch import SampleBatch
from .errors import ContractError, DomainError
from .montecarlo import Estimate, mean_estimate, ratio_estimate
from .stdf import CompleteDependence, DNormMonteCarlo, Independence, Logistic, StdfModel

log = logging.getLogger(__name__)

Sampler = Callable[[np.random.Generator, int], np.ndarray]


@dataclass
class SpectralLaw:
    """Law of a spectral vector S in [-inf, 0]^d with max(S) = 0 on every draw.

    ``expectation``, when present, evaluates E[g(S)] without sampling error
    from resampling (used by tilted laws). ``metadata`` collects diagnostics
    such as the effective sample size of the last resampling step.
    """

    dim: int
    sampler: Sampler
    density_on_face: Optional[Callable[[np.ndarray], np.ndarray]] = None
    atom_at_minus_inf: Optional[np.ndarray] = None
    name: str = "custom"
    expectation: Optional[Callable[..., Estimate]] = None
    metadata: dict = field(default_factory=dict)

    def draw(self, rng: np.random.Generator, n: int) -> np.ndarray:
        s = np.asarray(self.sampler(rng, int(n)), dtype=float)
        if s.shape != (int(n), self.dim):
            raise ContractError(f"spectral sampler returned shape {s.shape}, "
                                f"expected {(int(n), self.dim)}")
        if n and not np.all(s.max(axis=1) == 0.0):
            raise ContractError("spectral draw with max(S) != 0")
        return s

    def sample(self, n: int, seed: int, stream: int = 0) -> np.ndarray:
        return self.draw(rng_for(seed, stream), n)


@dataclass
class GeneratorLaw:
    """A T-, U- or R-kind generator law.

    For R-kind laws ``sigma`` and ``gamma`` (both positive) are required.
    ``atoms`` optionally records known probabilities P(coordinate = -inf)
    (P(R_j = 0) for R-kind).
    """

    kind: str
    dim: int
    sampler: Sampler
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None
    sigma: Optional[np.ndarray] = None
    gamma: Optional[np.ndarray] = None
    atoms: Optional[np.ndarray] = None
    name: str = "custom"

    def __post_init__(self):
        if self.kind not in ("T", "U", "R"):
            raise DomainError(f"generator kind must be T, U or R, got {self.kind!r}")
        if self.kind == "R":
            if self.sigma is None or self.gamma is None:
                raise DomainError("R-kind generators need sigma and gamma")
            self.sigma = as_float_array(self.sigma, self.dim, "sigma")
            self.gamma = as_float_array(self.gamma, self.dim, "gamma")
            if np.any(self.gamma <= 0) or np.any(self.sigma <= 0):
                raise DomainError("R-kind generators need positive sigma and gamma")

    def draw(self, rng, n) -> np.ndarray:
        v = np.asarray(self.sampler(rng, int(n)), dtype=float)
        if v.shape != (int(n), self.dim):
            raise ContractError(f"{self.kind} sampler returned shape {v.shape}, "
                                f"expected {(int(n), self.dim)}")
        if self.kind == "R" and np.any(v < 0):
            raise ContractError("R-kind draws must be nonnegative")
        return v

    def sample(self, n: int, seed: int, stream: int = 0) -> np.ndarray:
        return self.draw(rng_for(seed, stream), n)

    def check_conditions(self, n_mc: int, seed: int, stream: int = 0) -> dict:
        """Monte Carlo check of the defining conditions; raises ContractError.

        T: every draw has a finite maximum and each coordinate is finite with
        positive frequency. U: each E[exp(U_j)] is positive and finite, with a
        flag telling whether the second moment looks finite. R: each
        E[R_j^(1/gamma_j)] is positive.
        """
        v = self.sample(n_mc, seed, stream)
        report = {"kind": self.kind, "n": int(n_mc)}
        if self.kind == "T":
            if np.any(np.isneginf(v.max(axis=1))):
                raise ContractError("T draw with max(T) = -inf (condition T2)")
            frac = np.mean(~np.isneginf(v), axis=0)
            if np.any(frac == 0):
                raise ContractError(f"coordinates {np.flatnonzero(frac == 0).tolist()} never "
                                    "finite (condition T1)")
            report["finite_fraction"] = frac.tolist()
        elif self.kind == "U":
            with np.errstate(over="ignore"):
                e = np.exp(v)
            m = e.mean(axis=0)
            if np.any(m == 0) or np.any(~np.isfinite(m)):
                raise ContractError("E[exp(U_j)] must be positive and finite (condition U)")
            report["mean_exp"] = m.tolist()
            # crude heavy-tail flag: a single draw dominating the sum
            report["finite_variance"] = bool(np.all(e.max(axis=0) < 0.1 * e.sum(axis=0)))
        else:
            m = (v ** (1.0 / self.gamma)).mean(axis=0)
            if np.any(m == 0) or np.any(~np.isfinite(m)):
                raise ContractError("E[R_j^(1/gamma_j)] must be positive and finite")
            report["mean_power"] = m.tolist()
        return report


# -- spectral constructions ---------------------------------------------------


def spectral_from_t(g: GeneratorLaw) -> SpectralLaw:
    """S = T - max(T)."""
    if g.kind != "T":
        raise DomainError(f"expected a T-kind generator, got {g.kind}")

    def sampler(rng, n):
        t = g.draw(rng, n)
        if n and np.any(np.isneginf(t.max(axis=1))):
            raise ContractError("T draw with max(T) = -inf violates the generator contract")
        return shift_by_max(t)

    return SpectralLaw(g.dim, sampler, atom_at_minus_inf=g.atoms, name=f"T[{g.name}]")


def _tilted_weights(u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """exp(max U) rescaled by a common constant, and max U itself."""
    mu = u.max(axis=1)
    finite = np.isfinite(mu)
    c = mu[finite].max() if finite.any() else 0.0
    with np.errstate(under="ignore"):
        w = np.exp(mu - c)
    return w, mu


def spectral_from_u(g: GeneratorLaw, pool_size: int = 100_000) -> SpectralLaw:
    """Spectral law of the exponentially tilted generator, by importance resampling.

    Each call draws ``max(pool_size, n)`` proposals U, weights them by
    exp(max U), resamples ``n`` indices proportionally and returns U - max(U).
    The effective sample size of the last call is stored in
    ``law.metadata['ess']``; ``law.metadata['low_ess']`` flags an ESS below
    1% of the pool. ``law.expectation(func, n, seed)`` evaluates E[func(S)]
    by self-normalized weighting, without the resampling step.
    """
    if g.kind != "U":
        raise DomainError(f"expected a U-kind generator, got {g.kind}")
    law = SpectralLaw(g.dim, None, name=f"U[{g.name}]")

    def sampler(rng, n):
        m = max(int(pool_size), int(n))
        u = g.draw(rng, m)
        w, mu = _tilted_weights(u)
        total = w.sum()
        if not total > 0:
            raise ContractError("all tilting weights are zero")
        ess = total**2 / np.sum(w**2)
        law.metadata.update(ess=float(ess), pool=m, low_ess=bool(ess < m / 100))
        if ess < m / 100:
            log.warning("importance resampling: effective sample size %.1f of %d", ess, m)
        idx = rng.choice(m, size=int(n), p=w / total)
        return shift_by_max(u[idx])

    def expectation(func, n, seed, stream=0) -> Estimate:
        u = g.sample(n, seed, stream)
        w, mu = _tilted_weights(u)
        keep = w > 0
        vals = np.zeros(u.shape[0])
        vals[keep] = np.asarray(func(shift_by_max(u[keep])), dtype=float)
        return ratio_estimate(vals * w, w)

    law.sampler = sampler
    law.expectation = expectation
    return law


def u_from_r(g: GeneratorLaw) -> GeneratorLaw:
    """Law of U = log(gamma R / sigma) / gamma (R_j = 0 maps to -inf)."""
    if g.kind != "R":
        raise DomainError(f"expected an R-kind generator, got {g.kind}")
    sigma, gamma = g.sigma, g.gamma

    def sampler(rng, n):
        r = g.draw(rng, n)
        with np.errstate(divide="ignore"):
            return np.log(gamma * r / sigma) / gamma

    density = None
    if g.density is not None:
        def density(u):
            u = np.asarray(u, dtype=float)
            with np.errstate(over="ignore"):
                r = sigma / gamma * np.exp(gamma * u)
                jac = np.prod(sigma * np.exp(gamma * u), axis=-1)
            dens = np.asarray(g.density(r), dtype=float)
            # a vanishing R density wins over an overflowing Jacobian
            with np.errstate(invalid="ignore"):
                return np.where(dens == 0.0, 0.0, dens * jac)

    return GeneratorLaw("U", g.dim, sampler, density=density, atoms=g.atoms,
                        name=f"log[{g.name}]")


def spectral_from_pi_ell(pi, ell: StdfModel) -> SpectralLaw:
    """The unique spectral law of GP(1, 0, pi, ell).

    Uses the tilted construction P(S in .) ~ E[1{log(W / max W) in .} max W]
    with W = pi V, V a D-norm generator of ``ell``. Sampling is exact for the
    closed-form models and for DNormMonteCarlo (a discrete law on the frozen
    sample).
    """
    pi = as_float_array(pi, ell.dim, "pi")
    if abs(ell(pi) - 1.0) > 1e-10:
        raise DomainError("spectral law requires ell(pi) = 1")
    d = ell.dim
    logpi = np.log(pi)

    if isinstance(ell, Independence) or (isinstance(ell, Logistic) and ell.theta == 1.0):
        p = pi / pi.sum()

        def sampler(rng, n):
            s = np.full((n, d), -np.inf)
            s[np.arange(n), rng.choice(d, size=n, p=p)] = 0.0
            return s

        return SpectralLaw(d, sampler, atom_at_minus_inf=1.0 - p, name="independence")

    if isinstance(ell, CompleteDependence):
        s0 = logpi - logpi.max()

        def sampler(rng, n):
            return np.tile(s0, (n, 1))

        return SpectralLaw(d, sampler, atom_at_minus_inf=np.zeros(d), name="complete")

    if isinstance(ell, Logistic):
        theta = ell.theta
        p = pi / pi.sum()

        def sampler(rng, n):
            # mixture proposal sum_j W_j dP (W_j size-biased: E_j ~ Gamma(1 - theta)),
            # accepted with probability max(W) / sum(W); acceptance rate 1 / sum(pi)
            out = np.empty((0, d))
            while out.shape[0] < n:
                m = int(1.2 * (n - out.shape[0]) * pi.sum()) + 16
                e = rng.standard_exponential((m, d))
                j = rng.choice(d, size=m, p=p)
                e[np.arange(m), j] = rng.standard_gamma(1.0 - theta, size=m)
                logw = logpi - theta * np.log(e)
                top = logw.max(axis=1)
                ratio = 1.0 / np.exp(logw - top[:, None]).sum(axis=1)
                keep = rng.random(m) < ratio
                out = np.vstack([out, logw[keep] - top[keep, None]])
            return out[:n]

        return SpectralLaw(d, sampler, atom_at_minus_inf=np.zeros(d),
                           name=f"logistic(theta={theta})")

    if isinstance(ell, DNormMonteCarlo):
        w = ell.sample * pi
        mw = w.max(axis=1)
        keep = mw > 0
        with np.errstate(divide="ignore"):
            atoms_s = np.log(w[keep] / mw[keep, None])
        probs = mw[keep] / mw[keep].sum()

        def sampler(rng, n):
            return atoms_s[rng.choice(atoms_s.shape[0], size=n, p=probs)]

        atom = np.array([probs[np.isneginf(atoms_s[:, j])].sum() for j in range(d)])
        return SpectralLaw(d, sampler, atom_at_minus_inf=atom, name="dnorm_mc")

    raise DomainError(f"no spectral sampler available for {type(ell).__name__}")


# -- (pi, ell) extraction -----------------------------------------------------


def extract_pi_ell(s: SpectralLaw, n_mc: int, seed: int, stream: int = 0):
    """pi_j = E[exp(S_j)] and ell as a D-norm with V_j = exp(S_j) / pi_j.

    Both are computed on one frozen sample, on which ell(pi) = 1 holds.
    """
    draws = s.sample(n_mc, seed, stream)
    e = np.exp(draws)
    pi = e.mean(axis=0)
    if np.any(pi == 0):
        raise ContractError(f"coordinates {np.flatnonzero(pi == 0).tolist()} are never "
                            "finite in the sample (condition S2)")
    ell = DNormMonteCarlo(e / pi, seed=seed)
    return pi, ell


def pi_ell_from_u(g: GeneratorLaw, n_mc: int, seed: int, stream: int = 0):
    """pi_j = E[e^U_j] / E[e^max U] and ell with V_j = e^U_j / E[e^U_j], on one sample."""
    if g.kind != "U":
        raise DomainError(f"expected a U-kind generator, got {g.kind}")
    u = g.sample(n_mc, seed, stream)
    mu = u.max(axis=1)
    finite = np.isfinite(mu)
    c = mu[finite].max() if finite.any() else 0.0
    with np.errstate(under="ignore"):
        e = np.exp(u - c)  # common rescaling, cancels in both ratios
        top = np.exp(mu - c)
    m = e.mean(axis=0)
    if np.any(m == 0):
        raise ContractError("E[exp(U_j)] = 0 on the sample (condition U)")
    pi = m / top.mean()
    return pi, DNormMonteCarlo(e / m, seed=seed)


# -- simulation -----------------------------------------------------------------


#: S and E are rounded to multiples of this dyadic step (see sample_standard)
DYADIC_STEP = 2.0 ** -40


def _to_grid(a: np.ndarray) -> np.ndarray:
    # values beyond 2^12 in magnitude are left alone (their grid would not be exact)
    snapped = np.round(a / DYADIC_STEP) * DYADIC_STEP
    return np.where(np.abs(a) < 2.0 ** 12, snapped, a)


def sample_standard(s: SpectralLaw, n: int, seed: int, stream: int = 0):
    """Draw (S, E) with E unit exponential independent of S; Z = S + E.

    Both are rounded to multiples of 2^-40. On that grid S + E and
    (S + E) - E are exact in double precision, so S is recovered bit for bit
    as Z - max(Z) (and max(Z) == E). The rounding moves each value by at
    most 2^-41.
    """
    rng = rng_for(seed, stream)
    spec = _to_grid(s.draw(rng, n))
    e = _to_grid(rng.standard_exponential(int(n)))
    return spec, e


def simulate_gp(sigma, gamma, s: SpectralLaw, n: int, seed: int, stream: int = 0,
                params: dict | None = None) -> SampleBatch:
    """Rows X = sigma (exp(gamma (S + E)) - 1) / gamma.

    Coordinates with S_j = -inf land on the lower endpoint: -sigma_j/gamma_j
    when gamma_j > 0 and -inf otherwise.
    """
    sigma = as_float_array(sigma, s.dim, "sigma")
    gamma = as_float_array(gamma, s.dim, "gamma")
    if np.any(sigma <= 0):
        raise DomainError("sigma must be positive")
    spec, e = sample_standard(s, n, seed, stream)
    x = exp_scale(spec + e[:, None], sigma, gamma)
    meta = {"sigma": sigma.tolist(), "gamma": gamma.tolist(), "spectral": s.name}
    if params:
        meta.update(params)
    return SampleBatch(x, seed, "spectral", meta, stream)


# -- representation-specific cdfs -------------------------------------------------


def _check_z(z, dim):
    z = as_float_array(z, dim, "z")
    if np.any(np.isnan(z)) or np.any(np.isneginf(z)):
        raise DomainError("z must be real (or +inf)")
    return np.atleast_2d(z), z.ndim == 1


def cdf_t(g: GeneratorLaw, z, n_mc: int, seed: int, stream: int = 0):
    """H(z) = 1 - E[1 ^ exp(max(T - z) - max T)] by Monte Carlo.

    All points in ``z`` share one sample; returns an Estimate or a list.
    """
    if g.kind != "T":
        raise DomainError(f"expected a T-kind generator, got {g.kind}")
    rows, single = _check_z(z, g.dim)
    t = g.sample(n_mc, seed, stream)
    mt = t.max(axis=1)
    if np.any(np.isneginf(mt)):
        raise ContractError("T draw with max(T) = -inf")
    out = []
    for zz in rows:
        with np.errstate(invalid="ignore"):
            val = np.minimum(1.0, np.exp((t - zz).max(axis=1) - mt))
        est = mean_estimate(val)
        out.append(Estimate(1.0 - est.value, est.se, est.n))
    return out[0] if single else out


def cdf_u(g: GeneratorLaw, z, n_mc: int, seed: int, stream: int = 0):
    """H(z) = 1 - E[exp(max U) ^ exp(max(U - z))] / E[exp(max U)] by Monte Carlo."""
    if g.kind != "U":
        raise DomainError(f"expected a U-kind generator, got {g.kind}")
    rows, single = _check_z(z, g.dim)
    u = g.sample(n_mc, seed, stream)
    w, mu = _tilted_weights(u)
    c = mu[np.argmax(w)] if np.any(w > 0) else 0.0
    out = []
    for zz in rows:
        with np.errstate(under="ignore", over="ignore", invalid="ignore"):
            shifted = np.exp((u - zz).max(axis=1) - c)
        num = np.minimum(w, np.nan_to_num(shifted, nan=0.0))
        est = ratio_estimate(num, w)
        out.append(Estimate(1.0 - est.value, est.se, est.n))
    return out[0] if single else out


def cdf_r(g: GeneratorLaw, x, n_mc: int, seed: int, stream: int = 0):
    """cdf of the R-construction on the original scale, by Monte Carlo.

    Uses  int_0^inf Fbar_R(t^gamma (x + sigma/gamma)) dt
          = E[max_j (R_j / (x_j + sigma_j/gamma_j))^(1/gamma_j)]
    for the numerator (at x ^ 0 and at x) and the denominator (at 0).
    """
    if g.kind != "R":
        raise DomainError(f"expected an R-kind generator, got {g.kind}")
    x = as_float_array(x, g.dim)
    rows = np.atleast_2d(x)
    shift = g.sigma / g.gamma
    if np.any(rows + shift <= 0):
        raise DomainError("cdf_r requires sigma_j + gamma_j x_j > 0")
    r = g.sample(n_mc, seed, stream)

    def expected_max(point):
        return ((r / (point + shift)) ** (1.0 / g.gamma)).max(axis=1)

    den = expected_max(np.zeros(g.dim))
    out = []
    for xx in rows:
        num = expected_max(np.minimum(xx, 0.0)) - expected_max(xx)
        out.append(ratio_estimate(num, den))
    return out[0] if x.ndim == 1 else out
