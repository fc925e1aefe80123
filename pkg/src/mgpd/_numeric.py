"""Small numerical helpers: the gamma -> 0 limit convention, -inf arithmetic, RNG streams."""

from __future__ import annotations

import numpy as np

from .errors import DomainError

#: |gamma| below this value is treated as exactly zero (limit branch).
GAMMA_ZERO_TOL = 1e-12

#: sentinel used for coordinates sitting at -infinity
NEG_INF = -np.inf


def rng_for(seed: int, stream: int = 0) -> np.random.Generator:
    """Return the generator for ``(seed, stream)``.

    Distinct stream ids give statistically independent streams for the same
    seed, so sub-batches can be produced concurrently and reassembled.
    """
    if seed is None:
        raise ValueError("an explicit integer seed is required")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream),))
    return np.random.default_rng(ss)


def as_float_array(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if dim is not None and arr.shape[-1:] != (dim,):
        raise DomainError(f"{name} must have trailing dimension {dim}, got shape {arr.shape}")
    return arr


def _is_zero(gamma):
    return np.abs(gamma) < GAMMA_ZERO_TOL


def log_scale(x, sigma, gamma):
    """z = log(1 + gamma x / sigma) / gamma, read as x / sigma when gamma = 0.

    No support check; callers validate ``sigma + gamma x >= 0`` first.
    Boundary points map to -inf (gamma > 0) or +inf (gamma < 0).
    """
    x, sigma, gamma = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (x, sigma, gamma)))
    zero = _is_zero(gamma)
    g = np.where(zero, 1.0, gamma)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(zero, x / sigma, np.log1p(g * x / sigma) / g)
    return z


def exp_scale(z, sigma, gamma):
    """x = sigma (exp(gamma z) - 1) / gamma, read as sigma z when gamma = 0.

    Handles z = -inf: the result is -sigma/gamma for gamma > 0 and -inf otherwise.
    """
    z, sigma, gamma = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (z, sigma, gamma)))
    zero = _is_zero(gamma)
    g = np.where(zero, 1.0, gamma)
    with np.errstate(over="ignore", invalid="ignore"):
        x = np.where(zero, sigma * z, sigma * np.expm1(g * z) / g)
    return x


def tail_factor(x, sigma, gamma):
    """(1 + gamma x / sigma)^(-1/gamma), i.e. exp(-z); equals exp(-x/sigma) at gamma = 0."""
    with np.errstate(over="ignore"):
        return np.exp(-log_scale(x, sigma, gamma))


def check_support(x, sigma, gamma, allow_boundary: bool = True):
    """Raise DomainError when some coordinate has sigma + gamma x < 0 (or <= 0).

    The message names the first offending coordinate index.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(invalid="ignore"):
        margin = np.asarray(sigma, dtype=float) + np.asarray(gamma, dtype=float) * x
        bad = margin < 0 if allow_boundary else margin <= 0
    # -inf coordinates are lower endpoints for gamma <= 0, not violations
    bad &= ~np.isneginf(x) | (np.asarray(gamma) > 0)
    if np.any(bad):
        idx = np.argwhere(bad)[0]
        j = int(idx[-1])
        raise DomainError(
            f"coordinate {j} lies below the support boundary (sigma_j + gamma_j x_j <= 0)"
        )


def shift_by_max(t: np.ndarray) -> np.ndarray:
    """Row-wise t - max(t) under -inf arithmetic (-inf - finite = -inf).

    Rows whose maximum is -inf are rejected by the caller; here they give nan.
    """
    t = np.asarray(t, dtype=float)
    m = np.max(t, axis=-1, keepdims=True)
    with np.errstate(invalid="ignore"):
        return t - m


def weighted_sum(p: np.ndarray, s: np.ndarray) -> np.ndarray:
    """sum_j p_j s_j with the convention 0 * (-inf) = 0.

    ``p`` has shape (m, d) and ``s`` shape (n, d); the result has shape (n, m).
    """
    p = np.asarray(p, dtype=float)
    s = np.asarray(s, dtype=float)
    finite = np.where(np.isneginf(s), 0.0, s)
    out = finite @ p.T
    # any selected coordinate at -inf drags the sum to -inf
    hit = np.isneginf(s).astype(float) @ (p > 0).T.astype(float)
    return np.where(hit > 0, -np.inf, out)
