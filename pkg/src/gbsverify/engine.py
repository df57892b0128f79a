"""Run pipelines: draw, symmetrize, transform, accumulate, reduce."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from .core import CountDistribution, Representation, RunConfig, TrajectoryBatch
from .network import UnitaryMatrix, haar_unitary, load_unitary, transform
from .projectors import count_kernel_table
from .sampler import draw_trajectories, parity_symmetrize, subensemble_rng
from .stats import SubEnsembleAccumulator, SubEnsembleMean, accumulate_counts

__all__ = [
    "THREADS_ENV",
    "resolve_threads",
    "build_unitary",
    "subensemble_batch",
    "simulate_subensemble",
    "run_counts",
    "trajectory_observables",
]

THREADS_ENV = "GBSVERIFY_THREADS"


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1"))
    if threads < 1:
        raise ValueError("thread count must be positive")
    return threads


def build_unitary(config: RunConfig) -> UnitaryMatrix | None:
    """The interferometer of ``config``; ``None`` for the identity."""
    kind = config.unitary["kind"]
    if kind == "identity":
        return None
    if kind == "haar":
        return haar_unitary(config.modes, int(config.unitary["seed"]))
    U = load_unitary(config.unitary["path"])
    if U.modes != config.modes:
        raise ValueError(f"unitary file has {U.modes} modes, config has {config.modes}")
    return U


def subensemble_batch(config: RunConfig, index: int, U: UnitaryMatrix | None) -> TrajectoryBatch:
    rng = subensemble_rng(config, index)
    batch = draw_trajectories(config, index, rng)
    if config.representation is Representation.MATRIX_P:
        batch = parity_symmetrize(batch, config.parity_mode, rng)
    if U is not None:
        batch = transform(batch, U, config.block_size)
    return batch


def simulate_subensemble(config: RunConfig, index: int, U: UnitaryMatrix | None) -> SubEnsembleMean:
    batch = subensemble_batch(config, index, U)
    return accumulate_counts(batch, config.count_cutoff, config.subset, config.block_size)


def _parallel_map(fn: Callable[[int], object], count: int, threads: int) -> list:
    if threads == 1:
        return [fn(i) for i in range(count)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, range(count)))


def run_counts(
    config: RunConfig,
    threads: int | None = None,
    unitary: UnitaryMatrix | None = None,
) -> CountDistribution:
    """Estimate the (subset) total-count distribution ``m = 0..m_max``.

    Sub-ensembles are independent streams and are reduced in index order,
    so the result does not depend on ``threads``.
    """
    threads = resolve_threads(threads)
    U = unitary if unitary is not None else build_unitary(config)
    parts = _parallel_map(lambda i: simulate_subensemble(config, i, U), config.subensembles, threads)
    acc = SubEnsembleAccumulator()
    for i, part in enumerate(parts):
        acc.add(i, part)
    meta = {
        "method": config.representation.value,
        "M": config.modes,
        "r": config.to_dict()["squeezing"],
        "E_S": config.total_samples,
        "N_R": config.per_subensemble,
        "seed": config.seed,
        "unitary": config.unitary,
        "subset": None if config.subset is None else list(config.subset),
    }
    return acc.finalize(0, meta)


def _observable(batch: TrajectoryBatch, kernel: Representation, m: int, subset) -> np.ndarray:
    n_i = batch.mode_intensities()
    n = n_i.sum(axis=1)
    if subset is None or len(subset) == batch.modes:
        n_S, n_full = n, None
    else:
        n_S, n_full = n_i[:, list(subset)].sum(axis=1), n
    table, _ = count_kernel_table(n_S, n_full, m, kernel)
    values = table[:, m]
    if batch.parity == "antithetic":
        flip, _ = count_kernel_table(-n_S, None if n_full is None else -n_full, m, kernel)
        values = 0.5 * (values + flip[:, m])
    return values


def trajectory_observables(
    config: RunConfig,
    m: int,
    kernel: Representation | None = None,
    threads: int | None = None,
    unitary: UnitaryMatrix | None = None,
) -> np.ndarray:
    """Per-trajectory values of the ``m``-count kernel, shape ``(N_S, N_R)``.

    ``kernel`` defaults to the one matching the configured representation.
    """
    threads = resolve_threads(threads)
    kernel = config.representation if kernel is None else Representation(kernel)
    U = unitary if unitary is not None else build_unitary(config)

    def one(i: int) -> np.ndarray:
        return _observable(subensemble_batch(config, i, U), kernel, m, config.subset)

    return np.stack(_parallel_map(one, config.subensembles, threads))
