"""Stable tail dependence functions (stdfs) and their tail copulas.

An stdf ``ell`` on [0, inf)^d is convex, 1-homogeneous and squeezed between
``max(y)`` and ``sum(y)``. Every stdf is a D-norm, ``ell(y) = E[max(y V)]`` for
some nonnegative generator ``V`` with unit means, and the associated tail
copula is ``R(y) = E[min(y V)]``, or equivalently the inclusion-exclusion sum
of ``ell`` over coordinate subsets.

Three closed-form models are provided (independence, complete dependence,
the symmetric logistic model) plus :class:`DNormMonteCarlo`, which freezes a
seeded sample of ``V`` and evaluates both ``ell`` and ``R`` on it.
"""

from __future__ import annotations

import itertools
from typing import Callable, Sequence

import numpy as np
from scipy.special import gamma as gamma_fn

from ._numeric import rng_for
from .errors import DomainError

#: largest dimension for which the 2^d - 1 term inclusion-exclusion sum is used
MAX_INCLUSION_EXCLUSION_DIM = 20


class StdfModel:
    """Base class; subclasses implement :meth:`_evaluate` on validated rows."""

    variant: str = ""

    def __init__(self, dim: int):
        if int(dim) < 1:
            raise DomainError(f"dimension must be >= 1, got {dim}")
        self.dim = int(dim)

    # -- evaluation -------------------------------------------------------

    def _check(self, y) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        if y.ndim == 0 or y.shape[-1] != self.dim:
            raise DomainError(f"expected argument of length {self.dim}, got shape {y.shape}")
        if np.any(np.isnan(y)):
            raise DomainError("argument contains nan")
        if np.any(y < 0):
            raise DomainError("stdf arguments must be nonnegative")
        return y

    def __call__(self, y):
        """Evaluate ``ell`` at ``y`` (shape ``(d,)`` or ``(n, d)``)."""
        y = self._check(y)
        rows = np.atleast_2d(y)
        out = self._evaluate(rows)
        return float(out[0]) if y.ndim == 1 else out

    def _evaluate(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def tail_copula(self, y):
        """Tail copula ``R(y)`` by inclusion-exclusion over nonempty subsets."""
        y = self._check(y)
        if self.dim > MAX_INCLUSION_EXCLUSION_DIM:
            raise DomainError(
                f"inclusion-exclusion is limited to d <= {MAX_INCLUSION_EXCLUSION_DIM}; "
                "use a DNormMonteCarlo model for generator-based evaluation"
            )
        rows = np.atleast_2d(y)
        out = np.zeros(rows.shape[0])
        for size in range(1, self.dim + 1):
            sign = 1.0 if size % 2 == 1 else -1.0
            for subset in itertools.combinations(range(self.dim), size):
                masked = np.zeros_like(rows)
                masked[:, subset] = rows[:, subset]
                out += sign * self._evaluate(masked)
        return float(out[0]) if y.ndim == 1 else out

    def infinite_limit(self, y, mask) -> float:
        """Limit of ``ell(c w_M, y_{-M}) - ell(c w_M, 0)`` as ``c -> inf``.

        ``mask`` flags the coordinates sent to infinity (at any fixed positive
        rates ``w``); the value of ``y`` on those coordinates is ignored. This
        gives cdf values on the lower support boundary by right-continuity and
        the atom masses at the lower endpoints.
        """
        raise NotImplementedError

    def gradient(self, y) -> np.ndarray:
        raise NotImplementedError(f"{type(self).__name__} has no analytic gradient")

    # -- structure --------------------------------------------------------

    def marginal(self, subset: Sequence[int]) -> "StdfModel":
        """The |J|-variate stdf ``y_J -> ell(sum_{j in J} y_j e_j)`` (0-based indices)."""
        idx = _check_subset(subset, self.dim)
        return self._marginal(idx)

    def _marginal(self, idx: list[int]) -> "StdfModel":
        raise NotImplementedError

    def summary(self) -> tuple[float, float]:
        """(extremal coefficient ell(1,...,1), tail dependence coefficient R(1,...,1))."""
        ones = np.ones(self.dim)
        return self(ones), self.tail_copula(ones)

    def to_dict(self) -> dict:
        return {"variant": self.variant, "dim": self.dim, "params": {}}

    def __repr__(self):
        return f"{type(self).__name__}(dim={self.dim})"

    def __eq__(self, other):
        return type(self) is type(other) and self.to_dict() == other.to_dict()

    __hash__ = None


def _check_subset(subset, dim) -> list[int]:
    idx = [int(j) for j in subset]
    if not idx:
        raise DomainError("index subset must be nonempty")
    if len(set(idx)) != len(idx):
        raise DomainError(f"repeated indices in {idx}")
    for j in idx:
        if not 0 <= j < dim:
            raise DomainError(f"index {j} out of range for dimension {dim}")
    return idx


class Independence(StdfModel):
    """ell(y) = sum(y)."""

    variant = "independence"

    def _evaluate(self, y):
        return y.sum(axis=1)

    def infinite_limit(self, y, mask):
        y = self._check(y)
        mask = np.asarray(mask, dtype=bool)
        return float(np.sum(np.where(mask, 0.0, y)))

    def gradient(self, y):
        self._check(y)
        return np.ones(self.dim)

    def _marginal(self, idx):
        return Independence(len(idx))


class CompleteDependence(StdfModel):
    """ell(y) = max(y)."""

    variant = "complete"

    def _evaluate(self, y):
        return y.max(axis=1)

    def infinite_limit(self, y, mask):
        self._check(y)
        if not np.any(mask):
            return float(np.max(y))
        return 0.0

    def gradient(self, y):
        y = self._check(y)
        g = np.zeros(self.dim)
        g[int(np.argmax(y))] = 1.0
        return g

    def _marginal(self, idx):
        return CompleteDependence(len(idx))


class Logistic(StdfModel):
    """Symmetric logistic stdf ``(sum y_j^(1/theta))^theta``, theta in (0, 1].

    theta = 1 is independence; theta -> 0 approaches complete dependence.
    """

    variant = "logistic"

    def __init__(self, dim: int, theta: float):
        super().__init__(dim)
        theta = float(theta)
        if not 0.0 < theta <= 1.0:
            raise DomainError(f"logistic theta must lie in (0, 1], got {theta}")
        self.theta = theta

    def _evaluate(self, y):
        # scale by the row maximum so y**(1/theta) cannot overflow
        m = y.max(axis=1)
        safe = np.where(m > 0, m, 1.0)
        r = y / safe[:, None]
        with np.errstate(over="ignore"):
            s = np.sum(r ** (1.0 / self.theta), axis=1)
        return np.where(m > 0, m * s**self.theta, 0.0)

    def infinite_limit(self, y, mask):
        y = self._check(y)
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            return self(y)
        if self.theta == 1.0:
            return float(np.sum(np.where(mask, 0.0, y)))
        return 0.0

    def gradient(self, y):
        y = self._check(y)
        val = self(y)
        if val == 0:
            raise DomainError("gradient undefined at the origin")
        return (y / val) ** (1.0 / self.theta - 1.0)

    def _marginal(self, idx):
        return Logistic(len(idx), self.theta)

    def dnorm_generator(self) -> Callable[[np.random.Generator, int], np.ndarray]:
        """Sampler of V with ell(y) = E[max(y V)]: V_j = E_j^(-theta) / Gamma(1 - theta)."""
        return _GENERATORS["logistic"](self.dim, theta=self.theta)

    def to_dict(self):
        return {"variant": self.variant, "dim": self.dim, "params": {"theta": self.theta}}

    def __repr__(self):
        return f"Logistic(dim={self.dim}, theta={self.theta})"


class DNormMonteCarlo(StdfModel):
    """stdf represented by a frozen sample of its D-norm generator V.

    Columns of the sample are rescaled to unit empirical mean, so the bounds
    ``max(y) <= ell(y) <= sum(y)``, homogeneity and convexity hold exactly on
    the frozen sample; only the distance to the population stdf is random.

    Parameters
    ----------
    sample : array of shape (n_mc, d)
        Draws of V, nonnegative with positive column means.
    seed, generator : optional
        Provenance, kept for serialization.
    """

    variant = "dnorm_mc"

    def __init__(self, sample, *, seed: int | None = None, generator: dict | None = None,
                 normalize: bool = True):
        v = np.array(sample, dtype=float, copy=True)
        if v.ndim != 2:
            raise DomainError("generator sample must be a 2-d array (n_mc, d)")
        if np.any(~np.isfinite(v)) or np.any(v < 0):
            raise DomainError("generator draws must be finite and nonnegative")
        super().__init__(v.shape[1])
        means = v.mean(axis=0)
        if np.any(means <= 0):
            bad = int(np.argmin(means))
            raise DomainError(f"generator coordinate {bad} has zero mean")
        if normalize:
            v /= means
        v.setflags(write=False)
        self.sample = v
        self.n_mc = v.shape[0]
        self.seed = seed
        self.generator = generator

    @classmethod
    def from_generator(cls, name: str, dim: int, n_mc: int, seed: int, stream: int = 0,
                       **params) -> "DNormMonteCarlo":
        """Build from a named generator (see :data:`GENERATOR_NAMES`)."""
        if name not in _GENERATORS:
            raise DomainError(f"unknown generator {name!r}; known: {sorted(_GENERATORS)}")
        sampler = _GENERATORS[name](dim, **params)
        v = sampler(rng_for(seed, stream), int(n_mc))
        return cls(v, seed=seed, generator={"name": name, "stream": stream, **params})

    @classmethod
    def from_sampler(cls, sampler, dim: int, n_mc: int, seed: int, stream: int = 0):
        v = np.asarray(sampler(rng_for(seed, stream), int(n_mc)), dtype=float)
        if v.shape != (int(n_mc), dim):
            raise DomainError(f"sampler returned shape {v.shape}, expected {(n_mc, dim)}")
        return cls(v, seed=seed)

    def _rowwise(self, y, reducer):
        out = np.empty(y.shape[0])
        for i, row in enumerate(y):
            out[i] = reducer(self.sample * row).mean()
        return out

    def _evaluate(self, y):
        return self._rowwise(y, lambda a: a.max(axis=1))

    def _with_se(self, y, arg):
        # delta method: the columns were divided by their sample means, so the
        # estimate is a smooth function of (mean of max/min, column means)
        y = self._check(y)
        prod = self.sample * y
        k = arg(prod, axis=1)
        rows = np.arange(self.n_mc)
        vals = prod[rows, k]
        share = np.bincount(k, weights=vals, minlength=self.dim) / self.n_mc
        infl = vals - (self.sample - 1.0) @ share
        return float(vals.mean()), float(infl.std(ddof=1) / np.sqrt(self.n_mc))

    def evaluate_with_se(self, y) -> tuple[float, float]:
        """ell(y) and its standard error, including the column-normalization error."""
        return self._with_se(y, np.argmax)

    def tail_copula(self, y):
        """R(y) = E[min(y V)] on the frozen sample (the inclusion-exclusion
        version is available as :meth:`tail_copula_inclusion_exclusion`)."""
        y = self._check(y)
        rows = np.atleast_2d(y)
        out = self._rowwise(rows, lambda a: a.min(axis=1))
        return float(out[0]) if y.ndim == 1 else out

    def tail_copula_with_se(self, y) -> tuple[float, float]:
        return self._with_se(y, np.argmin)

    def tail_copula_inclusion_exclusion(self, y):
        return StdfModel.tail_copula(self, y)

    def infinite_limit(self, y, mask):
        y = self._check(y)
        mask = np.asarray(mask, dtype=bool)
        if not mask.any():
            return self(y)
        null = np.all(self.sample[:, mask] == 0, axis=1)
        yy = np.where(mask, 0.0, y)
        return float(np.sum((self.sample[null] * yy).max(axis=1)) / self.n_mc)

    def _marginal(self, idx):
        return DNormMonteCarlo(self.sample[:, idx], seed=self.seed, normalize=False,
                               generator=None)

    def to_dict(self):
        d = {"variant": self.variant, "dim": self.dim, "params": {}, "n_mc": self.n_mc}
        if self.generator is not None and self.seed is not None:
            d["seed"] = self.seed
            d["params"] = {"generator": dict(self.generator)}
        else:
            d["params"] = {"sample": self.sample.tolist()}
        return d

    def __repr__(self):
        gen = self.generator["name"] if self.generator else "sample"
        return f"DNormMonteCarlo(dim={self.dim}, n_mc={self.n_mc}, generator={gen})"


# -- named D-norm generators --------------------------------------------------


def _logistic_generator(dim, theta):
    theta = float(theta)
    if not 0.0 < theta <= 1.0:
        raise DomainError(f"logistic theta must lie in (0, 1], got {theta}")
    if theta == 1.0:
        return _independence_generator(dim)
    scale = gamma_fn(1.0 - theta)

    def sample(rng, n):
        return rng.standard_exponential((n, dim)) ** (-theta) / scale

    return sample


def _independence_generator(dim):
    def sample(rng, n):
        v = np.zeros((n, dim))
        v[np.arange(n), rng.integers(0, dim, size=n)] = dim
        return v

    return sample


def _complete_generator(dim):
    def sample(rng, n):
        return np.ones((n, dim))

    return sample


def _lognormal_generator(dim, scale=1.0, rho=0.0):
    """V_j = exp(s N_j - s^2/2) with equicorrelated standard normals N."""
    cov = scale**2 * ((1 - rho) * np.eye(dim) + rho * np.ones((dim, dim)))

    def sample(rng, n):
        g = rng.multivariate_normal(np.zeros(dim), cov, size=n)
        return np.exp(g - scale**2 / 2)

    return sample


def _dirichlet_generator(dim, alpha=1.0):
    """V = d W with W symmetric Dirichlet(alpha) on the unit simplex."""

    def sample(rng, n):
        return dim * rng.dirichlet(np.full(dim, float(alpha)), size=n)

    return sample


_GENERATORS = {
    "logistic": _logistic_generator,
    "independence": _independence_generator,
    "complete": _complete_generator,
    "lognormal": _lognormal_generator,
    "dirichlet": _dirichlet_generator,
}

GENERATOR_NAMES = tuple(sorted(_GENERATORS))


# -- functional interface -------------------------------------------------------


def eval_stdf(model: StdfModel, y) -> float:
    return model(y)


def eval_tail_copula(model: StdfModel, y) -> float:
    return model.tail_copula(y)


def marginal_stdf(model: StdfModel, subset: Sequence[int]) -> StdfModel:
    return model.marginal(subset)


def summary_coefficients(model: StdfModel) -> tuple[float, float]:
    return model.summary()


def stdf_from_dict(d: dict) -> StdfModel:
    """Inverse of ``StdfModel.to_dict``."""
    try:
        variant = d["variant"]
        dim = int(d["dim"])
    except KeyError as exc:
        raise DomainError(f"stdf specification is missing field {exc.args[0]!r}") from None
    params = d.get("params", {}) or {}
    if variant == "independence":
        return Independence(dim)
    if variant == "complete":
        return CompleteDependence(dim)
    if variant == "logistic":
        if "theta" not in params:
            raise DomainError("logistic stdf requires params.theta")
        return Logistic(dim, params["theta"])
    if variant == "dnorm_mc":
        if "sample" in params:
            model = DNormMonteCarlo(params["sample"], normalize=False)
        else:
            gen = dict(params.get("generator") or {})
            if "name" not in gen or "seed" not in d or "n_mc" not in d:
                raise DomainError("dnorm_mc needs params.generator.name, seed and n_mc")
            name = gen.pop("name")
            stream = gen.pop("stream", 0)
            model = DNormMonteCarlo.from_generator(name, dim, int(d["n_mc"]), int(d["seed"]),
                                                   stream=stream, **gen)
        if model.dim != dim:
            raise DomainError(f"dnorm_mc sample has dimension {model.dim}, declared {dim}")
        return model
    raise DomainError(f"unknown stdf variant {variant!r}")
