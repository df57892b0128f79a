"""Haar-random interferometers and their action on trajectory batches."""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np
from scipy.linalg import lapack

from .core import Stage, TrajectoryBatch

__all__ = [
    "UnitaryMatrix",
    "haar_unitary",
    "identity_unitary",
    "transform",
    "evolve_linear",
    "load_unitary",
    "save_unitary",
]


@dataclass(frozen=True)
class UnitaryMatrix:
    entries: np.ndarray
    seed: int | None = None

    @property
    def modes(self) -> int:
        return self.entries.shape[0]

    def unitarity_error(self) -> float:
        u = self.entries
        g = u.conj().T @ u
        g.flat[:: u.shape[0] + 1] -= 1
        return float(np.max(np.abs(g)))


def haar_unitary(M: int, seed: int) -> UnitaryMatrix:
    """Draw an ``M x M`` unitary from the Haar measure.

    QR of a complex Ginibre matrix, with the columns of Q rescaled by the
    phases of diag(R) so that the result does not depend on the QR sign
    convention (Mezzadri, 2007). The factorization runs in place through
    LAPACK ``zgeqrf``/``zungqr``, so peak memory stays near one ``M x M``
    complex matrix (1.6 GB at ``M = 10**4``).
    """
    if M < 1:
        raise ValueError("a unitary needs at least one mode")
    rng = np.random.Generator(np.random.PCG64(seed))
    z = np.empty((M, M), dtype=complex, order="F")
    z.real = rng.standard_normal((M, M))
    z.imag = rng.standard_normal((M, M))
    z *= 1 / np.sqrt(2.0)
    # the wrapper's minimal default workspace forces the unblocked algorithm
    lwork = 64 * M
    qr, tau, work, info = lapack.zgeqrf(z, lwork=lwork, overwrite_a=True)
    if info != 0:
        raise np.linalg.LinAlgError(f"zgeqrf failed with info={info}")
    d = np.diagonal(qr).copy()
    q, work, info = lapack.zungqr(qr, tau, lwork=lwork, overwrite_a=True)
    if info != 0:
        raise np.linalg.LinAlgError(f"zungqr failed with info={info}")
    q *= d / np.abs(d)
    return UnitaryMatrix(q, seed)


def identity_unitary(M: int) -> UnitaryMatrix:
    return UnitaryMatrix(np.eye(M, dtype=complex))


def transform(
    batch: TrajectoryBatch, U: UnitaryMatrix, block_size: int | None = None
) -> TrajectoryBatch:
    """Map every row to ``alpha' = U alpha``, ``beta' = U beta``."""
    if batch.stage is not Stage.INPUT:
        raise ValueError("batch has already been transformed")
    if U.modes != batch.modes:
        raise ValueError(f"unitary is {U.modes}x{U.modes} but batch has {batch.modes} modes")
    ut = U.entries.T
    if np.isrealobj(batch.alpha) and np.isrealobj(batch.beta):
        # real inputs: two real products instead of one complex product
        parts = (np.ascontiguousarray(ut.real), np.ascontiguousarray(ut.imag))

        def apply(x):
            return x @ parts[0] + 1j * (x @ parts[1])

    else:

        def apply(x):
            return x @ ut

    if block_size is None or block_size >= batch.samples:
        alpha, beta = apply(batch.alpha), apply(batch.beta)
    else:
        alpha = np.empty(batch.alpha.shape, dtype=complex)
        beta = np.empty(batch.beta.shape, dtype=complex)
        for lo in range(0, batch.samples, block_size):
            hi = lo + block_size
            alpha[lo:hi] = apply(batch.alpha[lo:hi])
            beta[lo:hi] = apply(batch.beta[lo:hi])
    return replace(batch, alpha=alpha, beta=beta, stage=Stage.TRANSFORMED)


def _propagator(omega: np.ndarray, t: float) -> np.ndarray:
    omega = np.asarray(omega, dtype=complex)
    if omega.ndim != 2 or omega.shape[0] != omega.shape[1]:
        raise ValueError("frequency matrix must be square")
    if np.max(np.abs(omega - omega.conj().T), initial=0.0) > 1e-12:
        raise ValueError("frequency matrix must be Hermitian")
    w, v = np.linalg.eigh(omega)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def evolve_linear(batch: TrajectoryBatch, omega: np.ndarray, t: float) -> TrajectoryBatch:
    """Evolve amplitudes under the Hamiltonian ``hbar * omega_ij a_i^dag a_j``.

    The characteristics of the linear Fokker-Planck equation give
    ``alpha(t) = exp(-i omega t) alpha(0)`` and likewise for ``beta``. Unlike
    :func:`transform`, this may be applied at any stage.
    """
    u = _propagator(omega, t)
    if u.shape[0] != batch.modes:
        raise ValueError("frequency matrix does not match the number of modes")
    ut = u.T
    return replace(batch, alpha=batch.alpha @ ut, beta=batch.beta @ ut, stage=Stage.TRANSFORMED)


def save_unitary(U: UnitaryMatrix, path: str | Path) -> None:
    """Write ``U`` as row-major little-endian float64 pairs ``(re, im)``, no header."""
    np.ascontiguousarray(U.entries, dtype="<c16").view("<f8").tofile(path)


def load_unitary(path: str | Path, check: float = 1e-10) -> UnitaryMatrix:
    """Read a unitary written by :func:`save_unitary`; M is inferred from the size."""
    raw = np.fromfile(path, dtype="<f8")
    M = int(round(np.sqrt(raw.size / 2)))
    if 2 * M * M != raw.size or M == 0:
        raise ValueError(f"{path}: {raw.size} doubles is not a square complex matrix")
    U = UnitaryMatrix(raw.view("<c16").reshape(M, M).astype(complex))
    err = U.unitarity_error()
    if err > check:
        raise ValueError(f"{path}: matrix is not unitary (max |U^dag U - I| = {err:.2e})")
    return U
