"""Monte Carlo estimates carrying their standard errors."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Estimate:
    """A Monte Carlo estimate: value, standard error and sample size."""

    value: float
    se: float
    n: int

    def __float__(self):
        return float(self.value)


def mean_estimate(values) -> Estimate:
    values = np.asarray(values, dtype=float)
    n = values.shape[0]
    se = values.std(ddof=1) / np.sqrt(n) if n > 1 else np.inf
    return Estimate(float(values.mean()), float(se), int(n))


def ratio_estimate(num, den) -> Estimate:
    """mean(num) / mean(den) with a delta-method standard error."""
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    n = num.shape[0]
    mden = den.mean()
    r = num.mean() / mden
    resid = num - r * den
    se = resid.std(ddof=1) / (np.sqrt(n) * mden) if n > 1 else np.inf
    return Estimate(float(r), float(se), int(n))
