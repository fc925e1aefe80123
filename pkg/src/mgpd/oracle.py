"""Brute-force checks of analytic quantities against simulated data and quadrature.

Every check returns :class:`ComparisonReport` records; a record passes when
the analytic and empirical values differ by at most ``k`` standard errors
(default 3), or by less than a stated critical value.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy import stats

from .batch import SampleBatch
from .errors import DomainError, NumericalError
from .params import GpParams, gp_cdf, marginal_survival


@dataclass
class ComparisonReport:
    statistic: str
    analytic: float
    empirical: float
    tolerance: float
    passed: bool
    n: int
    seed: Optional[int] = None
    extra: dict = field(default_factory=dict)

    @property
    def deviation(self) -> float:
        return abs(self.analytic - self.empirical)

    def to_json(self) -> str:
        return json.dumps(asdict(self), default=float)


def _report(statistic, analytic, empirical, se, n, seed, k=3.0, **extra) -> ComparisonReport:
    tol = k * se
    ok = abs(analytic - empirical) <= tol if se > 0 else analytic == empirical
    return ComparisonReport(statistic, float(analytic), float(empirical), float(tol),
                            bool(ok), int(n), seed, dict(extra))


def _batch_data(batch) -> tuple[np.ndarray, Optional[int]]:
    if isinstance(batch, SampleBatch):
        data, seed = batch.data, batch.seed
    else:
        data, seed = np.asarray(batch, dtype=float), None
    if data.ndim != 2 or data.shape[0] == 0:
        raise DomainError("empty batch")
    return data, seed


def binomial_se(p: float, n: int) -> float:
    return float(np.sqrt(max(p * (1.0 - p), 0.0) / n))


def check_cdf(batch, h: GpParams, grid, k: float = 3.0) -> list[ComparisonReport]:
    """Empirical cdf against :func:`gp_cdf` with binomial standard error at each grid point."""
    data, seed = _batch_data(batch)
    n = data.shape[0]
    out = []
    for x in np.atleast_2d(np.asarray(grid, dtype=float)):
        p = float(gp_cdf(h, x))
        emp = float(np.mean(np.all(data <= x, axis=1)))
        out.append(_report(f"cdf{x.tolist()}", p, emp, binomial_se(p, n), n, seed, k))
    return out


def check_positive_fraction(batch, h: GpParams, k: float = 3.0) -> list[ComparisonReport]:
    """Empirical P(X_j > 0) against pi_j."""
    data, seed = _batch_data(batch)
    n = data.shape[0]
    return [
        _report(f"P(X{j + 1}>0)", h.pi[j], np.mean(data[:, j] > 0), binomial_se(h.pi[j], n),
                n, seed, k)
        for j in range(h.dim)
    ]


def _numeric_gradient(ell, y, step=1e-6):
    g = np.empty(y.size)
    for j in range(y.size):
        up, down = y.copy(), y.copy()
        up[j] += step
        down[j] = max(y[j] - step, 0.0)
        g[j] = (ell(up) - ell(down)) / (up[j] - down[j])
    return g


def check_stdf(batch, h: GpParams, x_grid, k: float = 3.0) -> list[ComparisonReport]:
    """Empirical P(X not <= x) against ell(empirical P(X_j > x_j)), x >= 0.

    The standard error covers the randomness of both sides through the
    influence function 1{X not <= x} - sum_j d_j ell(p) 1{X_j > x_j}.
    """
    data, seed = _batch_data(batch)
    n = data.shape[0]
    out = []
    for x in np.atleast_2d(np.asarray(x_grid, dtype=float)):
        if np.any(x < 0):
            raise DomainError("the stdf identity holds for x >= 0 only")
        above = data > x
        joint = np.any(above, axis=1)
        marg = above.mean(axis=0)
        try:
            grad = h.ell.gradient(marg)
        except (NotImplementedError, DomainError):
            grad = _numeric_gradient(h.ell, marg)
        infl = joint - above @ grad
        se = float(infl.std(ddof=1) / np.sqrt(n))
        out.append(_report(f"stdf{x.tolist()}", float(h.ell(marg)), float(joint.mean()),
                           se, n, seed, k, model=float(h.ell(marginal_survival(h, x)))))
    return out


def check_extremal_coefficient(batch, h: GpParams, p: float, k: float = 3.0) -> ComparisonReport:
    """P(some Hbar_j(X_j) < p) / p against ell(1, ..., 1), with model margins."""
    data, seed = _batch_data(batch)
    n = data.shape[0]
    if not 0 < p <= h.pi.min():
        raise DomainError(f"p must lie in (0, min(pi)], got {p}")
    pos = np.maximum(data, 0.0)
    surv = np.where(data > 0, marginal_survival(h, pos), np.inf)
    hit = float(np.mean(np.any(surv < p, axis=1)))
    ext = float(h.ell(np.ones(h.dim)))
    return _report(f"extremal coefficient (p={p})", ext, hit / p,
                   binomial_se(p * ext, n) / p, n, seed, k)


def ks_exponential(values, seed=None, level: float = 0.01) -> ComparisonReport:
    """Kolmogorov-Smirnov distance to Exp(1) against the asymptotic critical value."""
    values = np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        raise DomainError("empty sample")
    return ks_test(values, stats.expon.cdf, "KS vs Exp(1)", seed, level)


def ks_test(values, cdf: Callable, name: str = "KS", seed=None,
            level: float = 0.01) -> ComparisonReport:
    values = np.asarray(values, dtype=float)
    n = values.size
    if n == 0:
        raise DomainError("empty sample")
    d = float(stats.kstest(values, cdf).statistic)
    crit = float(stats.kstwobign.ppf(1.0 - level) / np.sqrt(n))
    return ComparisonReport(name, 0.0, d, crit, d < crit, n, seed, {"level": level})


# -- density normalization ----------------------------------------------------------------


def _gauss_legendre(a: float, b: float, panels: int, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(a, b, panels + 1)
    half = (edges[1:] - edges[:-1])[:, None] / 2
    mid = (edges[1:] + edges[:-1])[:, None] / 2
    return (half * x + mid).ravel(), (half * w).ravel()


def _face_mass(density, dim, lo, hi, panels, order):
    # z = r + s with r = max(z) in (0, hi] and s on the face {s_k = 0, s_{-k} in [lo, 0]};
    # the Jacobian is one and the kink of the density along max(z) lies on the face boundary
    r, wr = _gauss_legendre(0.0, hi, panels, order)
    s, ws = _gauss_legendre(lo, 0.0, panels, order)
    grids = np.meshgrid(r, *([s] * (dim - 1)), indexing="ij")
    weights = np.meshgrid(wr, *([ws] * (dim - 1)), indexing="ij")
    rr = grids[0].ravel()
    w = np.prod([g.ravel() for g in weights], axis=0)
    total = 0.0
    for k in range(dim):
        z = np.empty((rr.size, dim))
        z[:, k] = rr
        others = [j for j in range(dim) if j != k]
        for col, g in zip(others, grids[1:]):
            z[:, col] = rr + g.ravel()
        total += float(np.sum(np.asarray(density(z), dtype=float) * w))
    return total


def check_density(density: Callable, dim: int, box: tuple = (-12.0, 30.0),
                  resolution: int = 4, order: int = 8, tol: float = 1e-3,
                  seed=None) -> ComparisonReport:
    """Total mass of a standardized density on {z not <= 0} by tensor Gauss-Legendre.

    The region is covered in face coordinates z = max(z) + s: for each
    coordinate k attaining the maximum, r = max(z) runs over (0, box[1]] and the
    other s_j over [box[0], 0]. The part with max(z) > box[1] has mass
    exp(-box[1]) exactly (max(Z) is unit exponential) and is added
    analytically; the part with some s_j < box[0] is not covered and shows up
    as a mass deficit. The discretization error is estimated by halving the
    number of panels and must be below ``tol``.
    """
    if not 1 <= dim <= 3:
        raise DomainError("density normalization checks are limited to d <= 3")
    lo, hi = map(float, box)
    if not lo < 0 < hi:
        raise DomainError("box must straddle zero")
    if resolution < 2:
        raise DomainError("resolution must be at least 2 panels")
    tail = float(np.exp(-hi))
    fine = _face_mass(density, dim, lo, hi, resolution, order)
    coarse = _face_mass(density, dim, lo, hi, resolution // 2, order)
    disc = abs(fine - coarse)
    if disc > tol:
        raise NumericalError("resolution too coarse for the density normalization check",
                             estimated_error=disc, resolution=resolution)
    mass = fine + tail
    return ComparisonReport("density mass", 1.0, mass, tol, abs(mass - 1.0) <= tol,
                            resolution, seed,
                            {"discretization_error": disc, "tail_mass": tail, "box": [lo, hi]})


def check_zero_region(density: Callable, dim: int, n: int = 1000, seed: int = 0):
    """The density must vanish on {z <= 0}; checked on random points there."""
    rng = np.random.default_rng(seed)
    z = -rng.exponential(2.0, size=(n, dim))
    vals = np.asarray(density(z), dtype=float)
    worst = float(np.max(np.abs(vals)))
    return ComparisonReport("density on {z <= 0}", 0.0, worst, 0.0, worst == 0.0, n, seed)


# -- output ---------------------------------------------------------------------------------


def to_json_lines(reports) -> str:
    return "".join(r.to_json() + "\n" for r in reports)


def format_table(reports) -> str:
    header = f"{'statistic':<36} {'analytic':>12} {'empirical':>12} {'tolerance':>11} {'n':>8}  result"
    lines = [header, "-" * len(header)]
    for r in reports:
        lines.append(f"{r.statistic[:36]:<36} {r.analytic:>12.6g} {r.empirical:>12.6g} "
                     f"{r.tolerance:>11.3g} {r.n:>8d}  {'pass' if r.passed else 'FAIL'}")
    return "\n".join(lines)
