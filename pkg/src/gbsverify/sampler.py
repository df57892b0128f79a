"""Phase-space trajectories of multimode squeezed vacuum.

For real ``r > 0`` the positive-P density of a squeezed vacuum mode lives on
the real plane and is proportional to
``exp(-(a**2 + b**2) * coth(r) / 2 + a * b)``. Completing the square gives a
zero-mean bivariate normal with covariance ``[[sinh cosh, sinh**2],
[sinh**2, sinh cosh]]``, which is what is drawn here.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .core import (
    ConfigError,
    Representation,
    RunConfig,
    Stage,
    TrajectoryBatch,
    derive_subensemble_seed,
)

__all__ = ["BivariateModeLaw", "mode_law", "draw_trajectories", "parity_symmetrize"]


@dataclass(frozen=True)
class BivariateModeLaw:
    var: float
    cov: float

    @property
    def covariance(self) -> np.ndarray:
        return np.array([[self.var, self.cov], [self.cov, self.var]])

    def cholesky(self) -> tuple[float, float, float]:
        """Lower factor ``[[l00, 0], [l10, l11]]`` of the covariance."""
        l00 = np.sqrt(self.var)
        l10 = self.cov / l00
        l11 = np.sqrt(self.var - l10 * l10)
        return l00, l10, l11


def mode_law(r: float) -> BivariateModeLaw:
    if not r > 0:
        raise ValueError(f"squeezing must be positive, got {r}")
    s, c = np.sinh(r), np.cosh(r)
    return BivariateModeLaw(var=float(s * c), cov=float(s * s))


def subensemble_rng(config: RunConfig, index: int) -> np.random.Generator:
    if not 0 <= index < config.subensembles:
        raise IndexError(f"sub-ensemble index {index} out of range")
    return np.random.Generator(np.random.PCG64(derive_subensemble_seed(config.seed, index)))


def draw_trajectories(
    config: RunConfig, subensemble_index: int, rng: np.random.Generator | None = None
) -> TrajectoryBatch:
    """Draw the ``per_subensemble`` input trajectories of one sub-ensemble.

    Every mode is independent; the batch is real (stage ``INPUT``). The
    generator is derived from ``(config.seed, subensemble_index)`` unless one
    is passed in, in which case it is advanced in place.
    """
    if rng is None:
        rng = subensemble_rng(config, subensemble_index)
    r = config.squeezers.r
    s, c = np.sinh(r), np.cosh(r)
    l00 = np.sqrt(s * c)
    l10 = s * s / l00
    l11 = np.sqrt(s * c - l10 * l10)
    z = rng.standard_normal((2, config.per_subensemble, r.size))
    alpha = l00 * z[0]
    beta = l10 * z[0] + l11 * z[1]
    return TrajectoryBatch(alpha, beta, config.representation, Stage.INPUT)


def parity_symmetrize(
    batch: TrajectoryBatch,
    mode: str = "antithetic",
    rng: np.random.Generator | None = None,
) -> TrajectoryBatch:
    """Apply the parity sign symmetry of matrix-P sampling to ``beta``.

    ``"antithetic"`` leaves the amplitudes alone and flags the batch so that
    kernels are averaged over ``(alpha, beta)`` and ``(alpha, -beta)``.
    ``"random"`` flips the sign of each row of ``beta`` with probability 1/2.
    """
    if batch.representation is not Representation.MATRIX_P:
        raise ValueError("parity symmetrization applies to matrix-P batches only")
    if batch.parity is not None:
        raise ValueError(f"batch already symmetrized ({batch.parity})")
    if mode == "antithetic":
        return replace(batch, parity="antithetic")
    if mode == "random":
        if rng is None:
            raise ConfigError("random parity mode needs a generator")
        signs = rng.integers(0, 2, size=batch.samples) * 2 - 1
        return replace(batch, beta=batch.beta * signs[:, None], parity="random")
    raise ConfigError(f"unknown parity mode {mode!r}")
