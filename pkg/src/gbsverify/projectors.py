"""Phase-space (c-number) kernels for photon counting.

Every observable here is a function of the trajectory intensities
``n_i = alpha_i * conj(beta_i)``. Two families are provided:

* positive-P kernels, the normally ordered projectors
  ``n**m * exp(-n) / m!``;
* parity (matrix-P) kernels obtained by projecting the coherent kernel onto
  even and odd photon-number parity. They involve the cat-state
  normalizations ``g_p`` and the ratios ``T_p = g_{p-1} / g_p``.

Kernels with factorials and hyperbolic functions of large arguments are
evaluated in log form and only exponentiated at the end.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .core import OmegaMatrix, Representation, SingularEvaluationError

__all__ = [
    "LogWeight",
    "log_cosh",
    "log_sinh",
    "cat_normalization",
    "cat_normalizations",
    "t_factor",
    "positive_p_count_kernel",
    "parity_count_kernel",
    "projected_count_kernel",
    "pattern_kernel",
    "mean_photon_kernel",
    "moment_kernel",
    "completeness_sum",
    "count_kernel_table",
]

LOG2 = math.log(2.0)
# |cosh(n)| below this relative to exp(|Re n|)/2 is treated as a pole
_POLE_TOL = 1e-12


@dataclass(frozen=True)
class LogWeight:
    """A kernel value stored as ``phase * exp(log_magnitude)``."""

    log_magnitude: float
    phase: complex = 1.0

    @property
    def value(self) -> complex:
        if self.log_magnitude == -math.inf:
            return 0j
        return self.phase * math.exp(self.log_magnitude)

    @property
    def real(self) -> float:
        return self.value.real

    @classmethod
    def from_log(cls, log_value: complex) -> "LogWeight":
        log_value = complex(log_value)
        if log_value.real == -math.inf:
            return cls(-math.inf, 1.0)
        theta = log_value.imag
        if theta == 0:
            return cls(log_value.real, 1.0)
        if abs(theta) == math.pi:
            # log of a negative real: keep the sign exact
            return cls(log_value.real, -1.0)
        return cls(log_value.real, complex(math.cos(theta), math.sin(theta)))

    def __mul__(self, other: "LogWeight") -> "LogWeight":
        return LogWeight(self.log_magnitude + other.log_magnitude, self.phase * other.phase)

    def __add__(self, other: "LogWeight") -> "LogWeight":
        hi, lo = (self, other) if self.log_magnitude >= other.log_magnitude else (other, self)
        if hi.log_magnitude == -math.inf:
            return hi
        s = hi.phase + lo.phase * math.exp(lo.log_magnitude - hi.log_magnitude)
        if s == 0:
            return LogWeight(-math.inf, 1.0)
        return LogWeight(hi.log_magnitude + math.log(abs(s)), s / abs(s))


def _fold(z):
    """Return ``(s, s*z)`` with ``s = +-1`` chosen so that ``Re(s*z) >= 0``."""
    z = np.asarray(z, dtype=complex)
    s = np.where(z.real < 0, -1.0, 1.0)
    return s, s * z


def log_cosh(z):
    """Complex ``log(cosh(z))`` without overflow; ``-inf`` on the poles."""
    _, w = _fold(z)
    e = np.exp(-2 * w)
    with np.errstate(divide="ignore"):
        return w + np.log1p(e) - LOG2


def log_sinh(z):
    """Complex ``log(sinh(z))`` without overflow; ``-inf`` at zero."""
    s, w = _fold(z)
    e = np.exp(-2 * w)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = w + np.log1p(-e) - LOG2
    # sinh is odd: log(-x) = log(x) + i*pi
    return np.where(s < 0, out + 1j * np.pi, out)


def _cosh_is_pole(z) -> np.ndarray:
    _, w = _fold(z)
    return np.abs(1 + np.exp(-2 * w)) < _POLE_TOL


def _log_power_over_factorial(n, m):
    """``log(n**m / m!)`` with the convention ``0**0 = 1``."""
    n = np.asarray(n, dtype=complex)
    m = np.asarray(m)
    with np.errstate(divide="ignore", invalid="ignore"):
        lp = m * np.log(n)
    lp = np.where(m == 0, 0.0, lp)
    lp = np.where((n == 0) & (m > 0), -np.inf, lp)
    return lp - gammaln(m + 1)


# --------------------------------------------------------------------------
# cat-state normalizations and T factors


def cat_normalization(n: complex, N: int, p: int) -> complex:
    """Normalization ``g_p(n) = sum_j n**(p + j N) / (p + j N)!`` of a projected coherent state.

    For ``N = 2`` this is ``cosh(n)`` (p = 0) or ``sinh(n)`` (p = 1); for
    ``N >> |n|`` it tends to ``n**p / p!``. The series is summed until a term
    past the peak drops below ``1e-16`` of the partial sum (floor ``1e-300``).
    """
    if N < 1 or not 0 <= p < N:
        raise ValueError(f"need 0 <= p < N, got p={p}, N={N}")
    n = complex(n)
    if n == 0:
        return 1.0 + 0j if p == 0 else 0j
    a = abs(n)
    k = p
    term = n**p / math.factorial(p) if p < 171 else complex(np.exp(_log_power_over_factorial(n, p)))
    total = term
    while True:
        # advance k -> k + N, multiplying by n / (k+1) ... n / (k+N)
        for i in range(1, N + 1):
            term *= n / (k + i)
        k += N
        total += term
        if k > a and abs(term) <= max(1e-16 * abs(total), 1e-300):
            return total


def cat_normalizations(n: complex, N: int) -> np.ndarray:
    """All ``g_0 .. g_{N-1}`` at ``n``."""
    return np.array([cat_normalization(n, N, p) for p in range(N)])


def t_factor(n: complex, N: int, p: int) -> complex:
    """``T_p = g_{p-1} / g_p`` with cyclic index (``g_{-1} = g_{N-1}``)."""
    gp = cat_normalization(n, N, p)
    if gp == 0:
        raise SingularEvaluationError(f"g_{p}({n}) = 0 for N={N}")
    return cat_normalization(n, N, (p - 1) % N) / gp


# --------------------------------------------------------------------------
# count kernels


def _power_weight(n: complex, m: int) -> LogWeight:
    """``n**m / m!`` as a LogWeight; the sign stays exact for real ``n``."""
    n = complex(n)
    if m == 0:
        return LogWeight(0.0)
    if n == 0:
        return LogWeight(-math.inf)
    mag = m * math.log(abs(n)) - math.lgamma(m + 1)
    if n.imag == 0:
        return LogWeight(mag, -1.0 if (n.real < 0 and m % 2) else 1.0)
    theta = m * math.atan2(n.imag, n.real)
    return LogWeight(mag, complex(math.cos(theta), math.sin(theta)))


def positive_p_count_kernel(n_S: complex, m: int) -> LogWeight:
    """Positive-P projector ``n_S**m exp(-n_S) / m!`` onto ``m`` counts."""
    if m < 0:
        raise ValueError("count must be non-negative")
    return _power_weight(n_S, m) * LogWeight.from_log(-complex(n_S))


def _check_parity_omega(omega: OmegaMatrix | None) -> OmegaMatrix:
    omega = OmegaMatrix.pure_squeezed() if omega is None else omega
    if omega.order != 2:
        raise ValueError("parity kernels need a 2x2 Omega")
    return omega


def _parity_factor(n_S: complex, n: complex, m: int, omega: OmegaMatrix, full: bool) -> LogWeight:
    """``tr[(C(n_S) T^{p_m} - S(n_S) T^{1-p_m}) Omega]`` for diagonal terms of Omega.

    Uses ``C(n_S) - S(n_S) T_0 = cosh(n - n_S) / cosh(n)`` and its relatives
    so no cancellation is needed. ``full`` means the subset is every mode,
    i.e. ``n - n_S`` is exactly zero.
    """
    d = 0j if full else complex(n) - complex(n_S)
    odd = m % 2 == 1
    out = LogWeight(-math.inf)
    w00, w11 = omega.entries[0, 0], omega.entries[1, 1]
    if w00 != 0:
        if bool(_cosh_is_pole(n)):
            raise SingularEvaluationError(f"cosh({n}) = 0")
        num = log_sinh(d) if odd else log_cosh(d)
        out = out + LogWeight.from_log(complex(num - log_cosh(n))) * LogWeight.from_log(np.log(complex(w00)))
    if w11 != 0:
        if complex(n) == 0:
            raise SingularEvaluationError("sinh(0) = 0 in the odd-parity normalization")
        num = log_cosh(d) if odd else log_sinh(d)
        out = out + LogWeight.from_log(complex(num - log_sinh(n))) * LogWeight.from_log(np.log(complex(w11)))
    return out


def parity_count_kernel(
    n_S: complex,
    n: complex,
    m: int,
    omega: OmegaMatrix | None = None,
    full: bool | None = None,
) -> LogWeight:
    """Matrix-P probability kernel for ``m`` counts in a mode subset.

    ``n_S`` is the subset intensity and ``n`` the total over all modes. For
    ``Omega = diag(1, 0)`` and the full mode set this reduces to
    ``n**m / (m! cosh n)`` for even ``m`` and exactly zero for odd ``m``.
    """
    if m < 0:
        raise ValueError("count must be non-negative")
    omega = _check_parity_omega(omega)
    if full is None:
        full = complex(n_S) == complex(n)
    factor = _parity_factor(n_S, n, m, omega, full)
    return factor * _power_weight(n_S, m)


def projected_count_kernel(n_S: complex, n: complex, m: int, omega: OmegaMatrix) -> complex:
    """Kernel ``tr[G(m) Omega]`` for a symmetry of any order ``N`` (diagonal Omega).

    With ``g_r`` the order-``N`` cat normalizations and ``h_r = g_r(-n_S)``,
    ``G(m)_pp = sum_r h_r g_{p-m-r}(n) / g_p(n) * n_S**m / m!``. For ``N = 2``
    this coincides with :func:`parity_count_kernel`. Direct series
    evaluation, intended for moderate ``|n|``.
    """
    if not omega.is_diagonal():
        raise ValueError("only diagonal Omega is supported")
    N = omega.order
    g = cat_normalizations(n, N)
    h = cat_normalizations(-complex(n_S), N)
    base = complex(np.exp(_log_power_over_factorial(n_S, m)))
    total = 0j
    for p, w in enumerate(omega.diagonal):
        if w == 0:
            continue
        if g[p] == 0:
            raise SingularEvaluationError(f"g_{p}({n}) = 0")
        s = sum(h[r] * g[(p - m - r) % N] for r in range(N))
        total += w * s / g[p]
    return total * base


def pattern_kernel(
    m_vec: Sequence[int],
    amplitudes: Sequence[complex],
    n: complex | None = None,
    omega: OmegaMatrix | None = None,
    representation: Representation = Representation.POSITIVE_P,
    full: bool | None = None,
) -> LogWeight:
    """Kernel of the projector onto the count pattern ``m_vec`` of a mode subset.

    ``amplitudes`` are the subset intensities ``n_i``; ``n`` is the intensity
    summed over all modes (only used by the matrix-P kernel; defaults to the
    subset total, i.e. the subset is every mode).
    """
    m_vec = [int(k) for k in m_vec]
    amps = [complex(a) for a in amplitudes]
    if len(m_vec) != len(amps):
        raise ValueError("one count per subset mode is required")
    if any(k < 0 for k in m_vec):
        raise ValueError("counts must be non-negative")
    prod = LogWeight(0.0)
    for k, a in zip(m_vec, amps):
        prod = prod * _power_weight(a, k)
    n_S = sum(amps, 0j)
    if Representation(representation) is Representation.POSITIVE_P:
        return prod * LogWeight.from_log(-n_S)
    if n is None:
        n, full = n_S, True
    omega = _check_parity_omega(omega)
    if full is None:
        full = complex(n) == n_S
    return _parity_factor(n_S, n, sum(m_vec), omega, full) * prod


def moment_kernel(
    n: complex,
    m: int,
    representation: Representation = Representation.POSITIVE_P,
    omega: OmegaMatrix | None = None,
) -> complex:
    """Kernel of the normally ordered moment ``<:n^m:>``.

    Positive-P: ``n**m``. Parity: ``n**m tr[T^{p_m} Omega]`` with ``p_m = m mod 2``,
    so even moments coincide with positive-P ones up to the trace of Omega.
    """
    n = complex(n)
    if Representation(representation) is Representation.POSITIVE_P:
        return n**m
    omega = _check_parity_omega(omega)
    w00, w11 = omega.entries[0, 0], omega.entries[1, 1]
    if m % 2 == 0:
        return n**m * (w00 + w11)
    out = 0j
    if w00 != 0:
        if bool(_cosh_is_pole(n)):
            raise SingularEvaluationError(f"cosh({n}) = 0")
        out += w00 * np.tanh(n)
    if w11 != 0:
        if n == 0:
            raise SingularEvaluationError("coth(0)")
        out += w11 / np.tanh(n)
    return n**m * out


def mean_photon_kernel(
    n: complex,
    representation: Representation = Representation.POSITIVE_P,
    omega: OmegaMatrix | None = None,
) -> complex:
    """Mean photon number kernel: ``n`` (positive-P) or ``n tanh(n)`` (parity)."""
    return moment_kernel(n, 1, representation, omega)


def completeness_sum(
    n_S: complex,
    n: complex | None = None,
    representation: Representation = Representation.POSITIVE_P,
    omega: OmegaMatrix | None = None,
    weight=None,
) -> complex:
    """Sum a count kernel over ``m = 0, 1, ...`` with adaptive truncation.

    Terms are added until ``m`` is past ``|n_S|`` and three successive terms
    are below ``1e-16`` of the running sum. ``weight(m)`` multiplies each
    term (e.g. ``lambda m: m`` for the mean).
    """
    rep = Representation(representation)
    total = 0j
    small = 0
    m = 0
    while True:
        if rep is Representation.POSITIVE_P:
            term = positive_p_count_kernel(n_S, m).value
        else:
            term = parity_count_kernel(n_S, n_S if n is None else n, m, omega, full=n is None).value
        if weight is not None:
            term *= weight(m)
        total += term
        small = small + 1 if abs(term) < 1e-16 * abs(total) else 0
        if m > abs(n_S) and small >= 3:
            return total
        m += 1


# --------------------------------------------------------------------------
# batch evaluation


def count_kernel_table(
    n_S: np.ndarray,
    n: np.ndarray | None,
    m_max: int,
    representation: Representation,
) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate ``m = 0..m_max`` count kernels for a vector of trajectories.

    Matrix-P kernels use ``Omega = diag(1, 0)``; pass ``n=None`` when the
    subset is every mode (odd columns are then exactly zero). Returns the
    complex table of shape ``(len(n_S), m_max + 1)`` and a boolean mask of
    rows hitting a pole, whose entries are zeroed.
    """
    n_S = np.asarray(n_S, dtype=complex)
    m = np.arange(m_max + 1)
    singular = np.zeros(n_S.shape, dtype=bool)
    lpf = _log_power_over_factorial(n_S[:, None], m[None, :])
    if Representation(representation) is Representation.POSITIVE_P:
        log_k = lpf - n_S[:, None]
    else:
        full = n is None
        n_tot = n_S if full else np.asarray(n, dtype=complex)
        singular = _cosh_is_pole(n_tot)
        lc = log_cosh(n_tot)
        if full:
            log_k = np.where(m % 2 == 0, lpf - lc[:, None], -np.inf)
        else:
            d = n_tot - n_S
            even = log_cosh(d) - lc
            odd = log_sinh(d) - lc
            log_k = np.where(m % 2 == 0, even[:, None], odd[:, None]) + lpf
    with np.errstate(over="ignore", invalid="ignore"):
        table = np.exp(log_k)
    table[singular] = 0
    bad = ~np.all(np.isfinite(table), axis=1)
    if bad.any():
        table[bad] = 0
        singular = singular | bad
    return table, singular
