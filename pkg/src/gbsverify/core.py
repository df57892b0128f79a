"""Domain types, run configuration and the seeding contract."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

__all__ = [
    "ConfigError",
    "SingularEvaluationError",
    "NumericalAbort",
    "Representation",
    "Stage",
    "Weighting",
    "SqueezerBank",
    "TrajectoryBatch",
    "OmegaMatrix",
    "CountDistribution",
    "DensityHistogram",
    "RunConfig",
    "derive_subensemble_seed",
    "splitmix64",
    "default_m_max",
]

_MASK64 = (1 << 64) - 1


class ConfigError(ValueError):
    """Raised when a run configuration fails validation."""


class SingularEvaluationError(ArithmeticError):
    """A kernel was evaluated at a pole (e.g. ``cosh(n) == 0``)."""


class NumericalAbort(RuntimeError):
    """A sub-ensemble exceeded the tolerated fraction of singular evaluations."""


class Representation(str, enum.Enum):
    POSITIVE_P = "positive-p"
    MATRIX_P = "matrix-p"


class Stage(str, enum.Enum):
    INPUT = "input"
    TRANSFORMED = "transformed"


class Weighting(str, enum.Enum):
    VALUE = "value"
    COUNT = "count"


@dataclass(frozen=True)
class SqueezerBank:
    """Per-mode squeezing parameters of the input squeezed vacuum."""

    r: np.ndarray

    def __post_init__(self):
        r = np.atleast_1d(np.asarray(self.r, dtype=float))
        if r.ndim != 1 or r.size < 1:
            raise ConfigError("squeezing must be a non-empty vector")
        if not np.all(np.isfinite(r)) or np.any(r <= 0):
            raise ConfigError("every squeezing parameter must be finite and > 0")
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @classmethod
    def uniform(cls, modes: int, r: float) -> "SqueezerBank":
        return cls(np.full(int(modes), float(r)))

    @property
    def modes(self) -> int:
        return self.r.size

    @property
    def mean_photons(self) -> np.ndarray:
        """Mean photon number ``sinh(r)**2`` of each mode."""
        return np.sinh(self.r) ** 2


@dataclass(frozen=True)
class TrajectoryBatch:
    """A block of paired phase-space amplitudes, one row per trajectory.

    ``parity`` is ``None`` for positive-P batches. For matrix-P batches it is
    set by :func:`gbsverify.sampler.parity_symmetrize` to ``"antithetic"``
    (kernels averaged over ``beta`` and ``-beta``) or ``"random"`` (a random
    sign has already been applied to each row of ``beta``).
    """

    alpha: np.ndarray
    beta: np.ndarray
    representation: Representation
    stage: Stage = Stage.INPUT
    parity: str | None = None

    def __post_init__(self):
        if self.alpha.shape != self.beta.shape or self.alpha.ndim != 2:
            raise ValueError(
                f"alpha/beta shape mismatch: {self.alpha.shape} vs {self.beta.shape}"
            )

    @property
    def samples(self) -> int:
        return self.alpha.shape[0]

    @property
    def modes(self) -> int:
        return self.alpha.shape[1]

    def mode_intensities(self) -> np.ndarray:
        """Per-mode ``alpha_j * conj(beta_j)``, shape (samples, modes)."""
        return self.alpha * np.conj(self.beta)

    def total_n(self) -> np.ndarray:
        """Total ``n = sum_j alpha_j conj(beta_j)`` for every trajectory."""
        return np.sum(self.mode_intensities(), axis=1)


@dataclass(frozen=True)
class OmegaMatrix:
    """Stochastic density matrix over the global symmetry eigenvalues."""

    entries: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.entries, dtype=complex)
        if e.ndim != 2 or e.shape[0] != e.shape[1] or e.shape[0] < 1:
            raise ValueError("Omega must be a square matrix")
        if abs(np.trace(e) - 1) > 1e-12:
            raise ValueError(f"Omega must have unit trace, got {np.trace(e)}")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)

    @property
    def order(self) -> int:
        return self.entries.shape[0]

    @property
    def diagonal(self) -> np.ndarray:
        return np.diag(self.entries)

    def is_diagonal(self) -> bool:
        return bool(np.all(self.entries == np.diag(self.diagonal)))

    @classmethod
    def pure_squeezed(cls) -> "OmegaMatrix":
        """Even-parity weight ``diag(1, 0)`` for pure squeezed vacuum."""
        return cls(np.diag([1.0, 0.0]))

    @classmethod
    def projector(cls, order: int, p: int = 0) -> "OmegaMatrix":
        e = np.zeros((order, order))
        e[p, p] = 1.0
        return cls(e)


@dataclass
class CountDistribution:
    """Probabilities of ``m_min..m_max`` total counts with 1-sigma errors."""

    m_min: int
    probability: np.ndarray
    sigma: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        self.probability = np.asarray(self.probability, dtype=float)
        self.sigma = np.asarray(self.sigma, dtype=float)
        if self.probability.shape != self.sigma.shape or self.probability.ndim != 1:
            raise ValueError("probability and sigma must be 1-D arrays of equal length")
        if self.m_min < 0:
            raise ValueError("m_min must be non-negative")

    @property
    def m_max(self) -> int:
        return self.m_min + self.probability.size - 1

    @property
    def m(self) -> np.ndarray:
        return np.arange(self.m_min, self.m_max + 1)

    def __eq__(self, other):
        if not isinstance(other, CountDistribution):
            return NotImplemented
        return (
            self.m_min == other.m_min
            and np.array_equal(self.probability, other.probability)
            and np.array_equal(self.sigma, other.sigma)
        )

    def window(self, m_lo: int, m_hi: int) -> "CountDistribution":
        lo, hi = m_lo - self.m_min, m_hi - self.m_min + 1
        return CountDistribution(
            m_lo, self.probability[lo:hi], self.sigma[lo:hi], dict(self.meta)
        )


@dataclass
class DensityHistogram:
    """Estimated density of a trajectory observable over equal-width bins."""

    b_min: float
    b_max: float
    density: np.ndarray
    sigma: np.ndarray
    weighting: Weighting
    underflow: int = 0
    overflow: int = 0
    total: int = 0

    @property
    def n_bins(self) -> int:
        return self.density.size

    @property
    def width(self) -> float:
        return (self.b_max - self.b_min) / self.n_bins

    @property
    def centers(self) -> np.ndarray:
        return self.b_min + (np.arange(self.n_bins) + 0.5) * self.width


def splitmix64(x: int) -> int:
    """One SplitMix64 output for state ``x``: golden-ratio increment then finalizer."""
    z = (int(x) + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_subensemble_seed(master_seed: int, index: int) -> int:
    """Seed of sub-ensemble ``index``: ``splitmix64(splitmix64(master) ^ index)``.

    SplitMix64 is a bijection on 64-bit words, so distinct indices map to
    distinct seeds for a fixed master seed. Mixing the master first keeps
    nearby master seeds (e.g. 0 and 1) from sharing sub-ensemble streams.
    """
    return splitmix64(splitmix64(master_seed) ^ int(index))


def default_m_max(r: Sequence[float] | np.ndarray, tail: float = 1e-11) -> int:
    """Count cutoff covering the exact total-count law of squeezed vacuum.

    Mean plus ten standard deviations (at least 30), extended if needed until
    the negative-binomial tail beyond it is below ``tail``.
    """
    r = np.atleast_1d(np.asarray(r, dtype=float))
    nbar = np.sinh(r) ** 2
    mean = float(nbar.sum())
    std = math.sqrt(float(np.sum(2 * nbar * (1 + nbar))))
    m_max = max(30, int(math.ceil(mean + 10 * std)))
    if np.allclose(r, r[0]):
        from scipy.stats import nbinom

        p = 1.0 / (1.0 + nbar[0])
        k = m_max // 2
        while nbinom.sf(k, r.size / 2, p) > tail:
            k = int(k * 1.25) + 1
        m_max = max(m_max, 2 * k + 1)
    return m_max


def _parse_u64(value: Any, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int) or not 0 <= value <= _MASK64:
        raise ConfigError(f"{name} must be an unsigned 64-bit integer")
    return value


@dataclass(frozen=True)
class RunConfig:
    """Validated Monte Carlo run description (see README for the JSON layout)."""

    squeezers: SqueezerBank
    representation: Representation
    unitary: dict[str, Any]
    subensembles: int
    per_subensemble: int
    seed: int
    m_max: int | None = None
    subset: tuple[int, ...] | None = None
    parity_mode: str = "antithetic"
    block_size: int = 1000

    @property
    def modes(self) -> int:
        return self.squeezers.modes

    @property
    def total_samples(self) -> int:
        return self.subensembles * self.per_subensemble

    @property
    def count_cutoff(self) -> int:
        return self.m_max if self.m_max is not None else default_m_max(self.squeezers.r)

    @property
    def full_set(self) -> bool:
        return self.subset is None or len(self.subset) == self.modes

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> "RunConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        try:
            modes = doc["modes"]
            squeezing = doc["squeezing"]
            ensemble = doc["ensemble"]
            seed = doc["seed"]
        except KeyError as exc:
            raise ConfigError(f"missing config key {exc.args[0]!r}") from None
        if isinstance(modes, bool) or not isinstance(modes, int) or modes < 1:
            raise ConfigError("modes must be a positive integer")
        if isinstance(squeezing, (int, float)) and not isinstance(squeezing, bool):
            squeezers = SqueezerBank.uniform(modes, squeezing)
        elif isinstance(squeezing, list):
            if len(squeezing) != modes:
                raise ConfigError(f"squeezing has {len(squeezing)} entries for {modes} modes")
            squeezers = SqueezerBank(np.asarray(squeezing, dtype=float))
        else:
            raise ConfigError("squeezing must be a number or an array")

        try:
            representation = Representation(doc.get("representation", "matrix-p"))
        except ValueError:
            raise ConfigError(
                f"representation must be 'positive-p' or 'matrix-p', got {doc.get('representation')!r}"
            ) from None

        unitary = doc.get("unitary", {"kind": "identity"})
        if not isinstance(unitary, dict) or unitary.get("kind") not in ("identity", "haar", "file"):
            raise ConfigError("unitary must be {'kind': 'identity'|'haar'|'file', ...}")
        if unitary["kind"] == "haar":
            _parse_u64(unitary.get("seed"), "unitary.seed")
        if unitary["kind"] == "file" and not isinstance(unitary.get("path"), str):
            raise ConfigError("unitary of kind 'file' needs a 'path'")

        if not isinstance(ensemble, dict):
            raise ConfigError("ensemble must be an object")
        n_s, n_r = ensemble.get("subensembles"), ensemble.get("per_subensemble")
        for name, v in (("subensembles", n_s), ("per_subensemble", n_r)):
            if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                raise ConfigError(f"ensemble.{name} must be a positive integer")
        if n_s < 2:
            raise ConfigError("at least two sub-ensembles are needed for error estimates")
        if "total" in ensemble and ensemble["total"] != n_s * n_r:
            raise ConfigError("ensemble.total must equal subensembles * per_subensemble")

        m_max = doc.get("m_max")
        if m_max is not None and (isinstance(m_max, bool) or not isinstance(m_max, int) or m_max < 0):
            raise ConfigError("m_max must be a non-negative integer")

        subset = doc.get("subset")
        if subset is not None:
            if not isinstance(subset, list) or not subset:
                raise ConfigError("subset must be a non-empty array of mode indices")
            if any(isinstance(i, bool) or not isinstance(i, int) or not 0 <= i < modes for i in subset):
                raise ConfigError(f"subset indices must lie in [0, {modes})")
            if len(set(subset)) != len(subset):
                raise ConfigError("subset indices must be distinct")
            subset = tuple(sorted(subset))

        parity_mode = doc.get("parity_mode", "antithetic")
        if parity_mode not in ("antithetic", "random"):
            raise ConfigError("parity_mode must be 'antithetic' or 'random'")
        block_size = doc.get("block_size", 1000)
        if isinstance(block_size, bool) or not isinstance(block_size, int) or block_size < 1:
            raise ConfigError("block_size must be a positive integer")

        return cls(
            squeezers=squeezers,
            representation=representation,
            unitary=dict(unitary),
            subensembles=n_s,
            per_subensemble=n_r,
            seed=_parse_u64(seed, "seed"),
            m_max=m_max,
            subset=subset,
            parity_mode=parity_mode,
            block_size=block_size,
        )

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        return cls.from_dict(doc)

    def to_dict(self) -> dict[str, Any]:
        r = self.squeezers.r
        doc: dict[str, Any] = {
            "modes": self.modes,
            "squeezing": float(r[0]) if np.all(r == r[0]) else r.tolist(),
            "representation": self.representation.value,
            "unitary": self.unitary,
            "ensemble": {
                "subensembles": self.subensembles,
                "per_subensemble": self.per_subensemble,
            },
            "seed": self.seed,
            "parity_mode": self.parity_mode,
            "block_size": self.block_size,
        }
        if self.m_max is not None:
            doc["m_max"] = self.m_max
        if self.subset is not None:
            doc["subset"] = list(self.subset)
        return doc
