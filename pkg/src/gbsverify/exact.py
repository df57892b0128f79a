"""Exact total-count distribution of equally squeezed multimode vacuum.

Photons are created in pairs, so the pair number ``k = m/2`` of ``M`` modes
with mean occupation ``nbar = sinh(r)**2`` is negative binomial with order
``M/2`` and success probability ``p = 1/(1 + nbar)``:

    G(m) = binom(M/2 + k - 1, k) p**(M/2) (1 - p)**k,   m = 2k,

and ``G(m) = 0`` for odd ``m``. A lossless interferometer does not change
the total count, so this is the reference for every network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .core import CountDistribution, default_m_max

__all__ = ["ExactParams", "exact_total_count_distribution", "exact_log_probability"]


@dataclass(frozen=True)
class ExactParams:
    M: int
    r: float

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("need at least one mode")
        if not self.r > 0:
            raise ValueError(f"squeezing must be positive, got {self.r}")

    @property
    def nbar(self) -> float:
        return math.sinh(self.r) ** 2

    @property
    def p(self) -> float:
        return 1.0 / (1.0 + self.nbar)

    @property
    def mean(self) -> float:
        return self.M * self.nbar

    @property
    def std(self) -> float:
        return math.sqrt(2 * self.M * self.nbar * (1 + self.nbar))


def exact_log_probability(params: ExactParams, m: np.ndarray) -> np.ndarray:
    """``log G(m)`` for even ``m`` (odd entries are ``-inf``)."""
    m = np.asarray(m)
    k = m / 2.0
    half = params.M / 2.0
    # log(1 - p) = log(nbar / (1 + nbar)), exact for small r
    log_q = 2 * math.log(math.sinh(params.r)) - math.log1p(params.nbar)
    log_p = -math.log1p(params.nbar)
    out = gammaln(half + k) - gammaln(k + 1) - gammaln(half) + half * log_p + k * log_q
    return np.where(m % 2 == 0, out, -np.inf)


def exact_total_count_distribution(M: int, r: float, m_max: int | None = None) -> CountDistribution:
    """Exact ``G(m)`` for ``m = 0..m_max``; sigma is identically zero.

    Odd ``M`` is handled by the real-order negative binomial (experimental).
    """
    params = ExactParams(int(M), float(r))
    if m_max is None:
        m_max = default_m_max(np.full(params.M, params.r))
    if m_max < 0:
        raise ValueError("m_max must be non-negative")
    m = np.arange(m_max + 1)
    prob = np.exp(exact_log_probability(params, m))
    meta = {
        "method": "exact",
        "M": params.M,
        "r": params.r,
        "nbar": params.nbar,
        "p": params.p,
        "normalization": math.fsum(prob),
        "experimental": params.M % 2 == 1,
    }
    return CountDistribution(0, prob, np.zeros_like(prob), meta)
