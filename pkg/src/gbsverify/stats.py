"""Sub-ensemble statistics, trajectory densities and distribution comparison.

Errors follow the usual phase-space convention: the ensemble is split into
``N_S`` sub-ensembles of ``N_R`` trajectories, and the standard error of the
grand mean is the spread of the sub-ensemble means divided by ``sqrt(N_S)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np

from .core import (
    CountDistribution,
    DensityHistogram,
    NumericalAbort,
    Representation,
    Stage,
    TrajectoryBatch,
    Weighting,
)
from .projectors import count_kernel_table

__all__ = [
    "SubEnsembleMean",
    "SubEnsembleAccumulator",
    "accumulate_counts",
    "combine_subensembles",
    "histogram_density",
    "ComparisonReport",
    "compare",
    "MAX_SINGULAR_FRACTION",
]

MAX_SINGULAR_FRACTION = 1e-3


@dataclass(frozen=True)
class SubEnsembleMean:
    """Finalized kernel means of one sub-ensemble."""

    mean: np.ndarray  # complex, one entry per count
    samples: int
    singular: int = 0


def _subset_intensities(batch: TrajectoryBatch, subset):
    n_i = batch.mode_intensities()
    n = n_i.sum(axis=1)
    if subset is None or len(subset) == batch.modes:
        return n, None
    return n_i[:, list(subset)].sum(axis=1), n


def accumulate_counts(
    batch: TrajectoryBatch,
    m_max: int,
    subset=None,
    block_size: int = 1000,
) -> SubEnsembleMean:
    """Mean count kernels ``m = 0..m_max`` over one batch of trajectories.

    Positive-P batches use ``n_S**m exp(-n_S) / m!``; matrix-P batches use the
    parity kernel, averaged over ``beta -> -beta`` when the batch is flagged
    antithetic. Trajectories hitting a kernel pole contribute zero and are
    counted; more than :data:`MAX_SINGULAR_FRACTION` of them aborts.
    """
    if batch.stage is not Stage.TRANSFORMED and batch.stage is not Stage.INPUT:
        raise ValueError(f"unexpected batch stage {batch.stage}")
    rep = batch.representation
    antithetic = rep is Representation.MATRIX_P and batch.parity == "antithetic"
    n_S, n = _subset_intensities(batch, subset)
    total = np.zeros(m_max + 1, dtype=complex)
    singular = 0
    for lo in range(0, batch.samples, block_size):
        hi = lo + block_size
        sub_n = None if n is None else n[lo:hi]
        table, bad = count_kernel_table(n_S[lo:hi], sub_n, m_max, rep)
        if antithetic:
            flip, bad_f = count_kernel_table(
                -n_S[lo:hi], None if sub_n is None else -sub_n, m_max, rep
            )
            table = 0.5 * (table + flip)
            bad = bad | bad_f
        total += table.sum(axis=0)
        singular += int(bad.sum())
    if singular > MAX_SINGULAR_FRACTION * batch.samples:
        raise NumericalAbort(
            f"{singular} of {batch.samples} trajectories hit a kernel pole"
        )
    return SubEnsembleMean(total / batch.samples, batch.samples, singular)


@dataclass
class SubEnsembleAccumulator:
    """Finalized sub-ensemble means keyed by sub-ensemble index.

    Merging is a union of disjoint index sets and the reduction always runs
    in index order, so any merge tree gives bit-identical results.
    """

    parts: dict[int, SubEnsembleMean] = field(default_factory=dict)

    def add(self, index: int, part: SubEnsembleMean) -> None:
        if index in self.parts:
            raise ValueError(f"sub-ensemble {index} already accumulated")
        self.parts[index] = part

    def merge(self, other: "SubEnsembleAccumulator") -> "SubEnsembleAccumulator":
        clash = self.parts.keys() & other.parts.keys()
        if clash:
            raise ValueError(f"sub-ensembles {sorted(clash)} present in both accumulators")
        return SubEnsembleAccumulator({**self.parts, **other.parts})

    @property
    def singular(self) -> int:
        return sum(p.singular for p in self.parts.values())

    def means(self) -> np.ndarray:
        return np.stack([self.parts[i].mean for i in sorted(self.parts)])

    def finalize(self, m_min: int = 0, meta: Mapping[str, Any] | None = None) -> CountDistribution:
        dist = combine_subensembles(self.means(), m_min, meta)
        dist.meta["singular_evaluations"] = self.singular
        return dist


def combine_subensembles(
    means: np.ndarray, m_min: int = 0, meta: Mapping[str, Any] | None = None
) -> CountDistribution:
    """Grand mean and CLT error bars from an ``(N_S, K)`` array of sub-ensemble means.

    ``sigma = sqrt(var / N_S)`` with the unbiased (``N_S - 1``) variance of the
    real parts. The largest imaginary part of the grand mean is recorded in
    ``meta["imag_residue_max"]``.
    """
    means = np.asarray(means)
    if means.ndim != 2 or means.shape[0] < 2:
        raise ValueError("need at least two sub-ensemble means")
    n_s = means.shape[0]
    grand = means.mean(axis=0)
    re = means.real
    sigma = np.sqrt(re.var(axis=0, ddof=1) / n_s)
    out = dict(meta or {})
    out["subensembles"] = n_s
    out["imag_residue_max"] = float(np.max(np.abs(grand.imag), initial=0.0))
    return CountDistribution(m_min, grand.real.copy(), sigma, out)


def histogram_density(
    values: np.ndarray,
    b_min: float,
    b_max: float,
    n_bins: int,
    weighting: Weighting | str = Weighting.VALUE,
) -> DensityHistogram:
    """Bin an ``(N_S, N_R)`` array of trajectory observables.

    ``VALUE`` puts the sub-ensemble average of the observable values
    landing in a bin, divided by the bin width, into that bin; ``COUNT`` is the
    ordinary normalized histogram. Bins are half-open except the last, which
    includes ``b_max``. Values outside the range go to the under/overflow
    tallies. Sigma is the sub-ensemble spread over ``sqrt(N_S)`` (NaN when
    ``N_S == 1``).
    """
    weighting = Weighting(weighting)
    values = np.asarray(values)
    if values.ndim == 1:
        values = values[None, :]
    values = np.real(values).astype(float)
    if not n_bins >= 1 or not b_max > b_min:
        raise ValueError(f"empty bin range [{b_min}, {b_max}] with {n_bins} bins")
    if not np.all(np.isfinite(values)):
        raise ValueError("observable values must be finite")
    n_s, n_r = values.shape
    width = (b_max - b_min) / n_bins
    idx = np.floor((values - b_min) / width).astype(np.int64)
    idx[values == b_max] = n_bins - 1
    inside = (values >= b_min) & (values <= b_max) & (idx >= 0) & (idx < n_bins)
    underflow = int(np.sum(values < b_min))
    overflow = int(values.size - underflow - inside.sum())
    rows = np.broadcast_to(np.arange(n_s)[:, None], values.shape)
    flat = (rows * n_bins + idx)[inside]
    w = values[inside] if weighting is Weighting.VALUE else None
    per = np.bincount(flat, weights=w, minlength=n_s * n_bins).reshape(n_s, n_bins)
    per = per / (n_r * width)
    density = per.mean(axis=0)
    if n_s > 1:
        sigma = np.sqrt(per.var(axis=0, ddof=1) / n_s)
    else:
        sigma = np.full(n_bins, np.nan)
    return DensityHistogram(
        float(b_min), float(b_max), density, sigma, weighting, underflow, overflow, int(values.size)
    )


@dataclass
class ComparisonReport:
    m_min: int
    m_max: int
    max_abs_diff: float
    argmax_m: int
    mean_abs_diff: float
    z: np.ndarray
    frac_z_le_3: float
    max_sigma: float

    def to_dict(self) -> dict[str, Any]:
        finite = self.z[np.isfinite(self.z)]
        return {
            "m_min": self.m_min,
            "m_max": self.m_max,
            "max_abs_diff": self.max_abs_diff,
            "argmax_m": self.argmax_m,
            "mean_abs_diff": self.mean_abs_diff,
            "max_sigma": self.max_sigma,
            "z_max": float(np.max(finite)) if finite.size else 0.0,
            "z_mean": float(np.mean(finite)) if finite.size else 0.0,
            "z_infinite": int(np.sum(~np.isfinite(self.z))),
            "frac_z_le_3": self.frac_z_le_3,
        }


def compare(a: CountDistribution, b: CountDistribution) -> ComparisonReport:
    """Compare two distributions over their common count range."""
    lo, hi = max(a.m_min, b.m_min), min(a.m_max, b.m_max)
    if lo > hi:
        raise ValueError(
            f"count ranges [{a.m_min}, {a.m_max}] and [{b.m_min}, {b.m_max}] do not overlap"
        )
    wa, wb = a.window(lo, hi), b.window(lo, hi)
    diff = np.abs(wa.probability - wb.probability)
    err = np.hypot(wa.sigma, wb.sigma)
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(err > 0, diff / err, np.where(diff > 0, np.inf, 0.0))
    k = int(np.argmax(diff))
    return ComparisonReport(
        m_min=lo,
        m_max=hi,
        max_abs_diff=float(diff[k]),
        argmax_m=lo + k,
        mean_abs_diff=float(diff.mean()),
        z=z,
        frac_z_le_3=float(np.mean(z <= 3)),
        max_sigma=float(np.max(np.maximum(wa.sigma, wb.sigma))),
    )


def merge_all(parts: Iterable[SubEnsembleAccumulator]) -> SubEnsembleAccumulator:
    out = SubEnsembleAccumulator()
    for p in parts:
        out = out.merge(p)
    return out
