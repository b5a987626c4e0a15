"""Photon-number distributions, loss channels, threshold detectors and the
small exact linear algebra (permanent, determinant) everything else is
built on.

All distributions here are plain probability vectors over photon number
``0..n_max``.  Truncated distributions are allowed to sum to slightly less
than one; the missing tail is carried, never silently renormalized.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import DimensionError, DomainError

__all__ = [
    "PhotonNumberDistribution",
    "LossChannel",
    "ThresholdDetector",
    "InterferometerMatrix",
    "loss_survival",
    "apply_loss",
    "click_probability",
    "permanent",
    "determinant",
]

# Largest matrix the exact permanent/determinant routines accept.  Ryser is
# O(2^n n^2); 12 keeps a single call well under a second.
MAX_EXACT_DIM = 12

_PROB_SLACK = 1e-12


def _check_probability(value: float, name: str) -> float:
    value = float(value)
    if not (-_PROB_SLACK <= value <= 1.0 + _PROB_SLACK):
        raise DomainError(f"{name} must lie in [0, 1], got {value!r}")
    return min(max(value, 0.0), 1.0)


@dataclass(frozen=True)
class PhotonNumberDistribution:
    """Probability vector over photon number 0..n_max.

    ``tail_tol`` bounds how much probability mass a truncated distribution
    may be missing; the deficit is exposed via :attr:`tail_deficit` so
    callers can decide whether their truncation is adequate.
    """

    probs: np.ndarray
    tail_tol: float = 1e-9

    def __post_init__(self) -> None:
        probs = np.array(self.probs, dtype=float)
        if probs.ndim != 1 or probs.size == 0:
            raise DomainError("probs must be a non-empty 1-d array")
        if np.any(probs < -_PROB_SLACK) or np.any(probs > 1.0 + _PROB_SLACK):
            raise DomainError("probability entries must lie in [0, 1]")
        total = float(probs.sum())
        if total > 1.0 + 1e-9:
            raise DomainError(f"probabilities sum to {total!r} > 1")
        if total < 1.0 - self.tail_tol - 1e-9:
            raise DomainError(
                f"probabilities sum to {total!r}, more than tail_tol="
                f"{self.tail_tol!r} below 1; truncation too aggressive"
            )
        probs = np.clip(probs, 0.0, 1.0)
        probs.flags.writeable = False
        object.__setattr__(self, "probs", probs)

    @property
    def n_max(self) -> int:
        return self.probs.size - 1

    @property
    def total(self) -> float:
        return float(self.probs.sum())

    @property
    def tail_deficit(self) -> float:
        return max(0.0, 1.0 - self.total)

    def mean(self) -> float:
        return float(np.arange(self.probs.size) @ self.probs)

    @classmethod
    def vacuum(cls, n_max: int = 0) -> "PhotonNumberDistribution":
        probs = np.zeros(n_max + 1)
        probs[0] = 1.0
        return cls(probs)

    @classmethod
    def fock(cls, n: int) -> "PhotonNumberDistribution":
        if n < 0:
            raise DomainError("photon number must be >= 0")
        probs = np.zeros(n + 1)
        probs[n] = 1.0
        return cls(probs)


@dataclass(frozen=True)
class LossChannel:
    """Independent per-photon survival with probability ``transmittance``."""

    transmittance: float

    def __post_init__(self) -> None:
        object.__setattr__(
            self, "transmittance", _check_probability(self.transmittance, "transmittance")
        )


@dataclass(frozen=True)
class ThresholdDetector:
    """Click/no-click detector: each photon fires it with probability
    ``efficiency``; ``dark_click_prob`` is the chance of a click per gate
    with no photon present."""

    efficiency: float = 1.0
    dark_click_prob: float = 0.0

    def __post_init__(self) -> None:
        object.__setattr__(self, "efficiency", _check_probability(self.efficiency, "efficiency"))
        object.__setattr__(
            self,
            "dark_click_prob",
            _check_probability(self.dark_click_prob, "dark_click_prob"),
        )

    def click_given_n(self, n: int | np.ndarray) -> float | np.ndarray:
        """P(click | n photons arriving) = 1 - (1-efficiency)^n (1-dark)."""
        return 1.0 - (1.0 - self.efficiency) ** np.asarray(n) * (1.0 - self.dark_click_prob)


@dataclass(frozen=True)
class InterferometerMatrix:
    """Small complex transfer matrix of a (near-)unitary optical network.

    Matrices built from measured intensity transmissions are generally not
    exactly unitary; the deviation ||L^dag L - I||_F is kept around and a
    warning fires above ``warn_threshold`` (gross non-unitarity usually
    means a typo in the transmissions, not a lossy splitter).  None turns
    the warning off for intentionally lossy networks.
    """

    matrix: np.ndarray
    warn_threshold: float | None = 0.05
    unitarity_deviation: float = field(init=False)

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"matrix must be square, got shape {m.shape}")
        if m.shape[0] > MAX_EXACT_DIM:
            raise DimensionError(f"matrix dimension {m.shape[0]} exceeds cap {MAX_EXACT_DIM}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)
        dev = float(np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0])))
        object.__setattr__(self, "unitarity_deviation", dev)
        if self.warn_threshold is not None and dev > self.warn_threshold:
            warnings.warn(
                f"matrix deviates from unitarity by {dev:.3g} (threshold "
                f"{self.warn_threshold:g})",
                stacklevel=2,
            )

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


# -----------------------------------------------------------------------
# loss and detection
# -----------------------------------------------------------------------


def loss_survival(n: int, transmittance: float) -> float:
    """Probability that at least one of ``n`` photons survives a loss
    channel of the given transmittance: 1 - (1-t)^n."""
    if n < 0 or int(n) != n:
        raise DomainError(f"photon number must be a non-negative integer, got {n!r}")
    t = _check_probability(transmittance, "transmittance")
    return 1.0 - (1.0 - t) ** int(n)


def apply_loss(dist: PhotonNumberDistribution, channel: LossChannel) -> PhotonNumberDistribution:
    """Push a photon-number distribution through independent per-photon loss.

    P'(k) = sum_{n >= k} P(n) C(n, k) t^k (1-t)^(n-k).  Total probability is
    conserved to machine precision because each binomial row sums to one.
    """
    t = channel.transmittance
    probs = dist.probs
    n_max = dist.n_max
    out = np.zeros_like(probs)
    for n in range(n_max + 1):
        p = probs[n]
        if p == 0.0:
            continue
        for k in range(n + 1):
            out[k] += p * comb(n, k) * t**k * (1.0 - t) ** (n - k)
    return PhotonNumberDistribution(out, tail_tol=dist.tail_tol)


def click_probability(dist: PhotonNumberDistribution, detector: ThresholdDetector) -> float:
    """Threshold-detector click probability for a photon-number distribution.

    A truncated tail (mass ``dist.tail_deficit``) is not counted; callers
    holding distributions with a meaningful tail should extend n_max.
    """
    n = np.arange(dist.probs.size)
    return float(dist.probs @ detector.click_given_n(n))


# -----------------------------------------------------------------------
# permanent / determinant
# -----------------------------------------------------------------------


def _as_square(matrix: np.ndarray | InterferometerMatrix) -> np.ndarray:
    if isinstance(matrix, InterferometerMatrix):
        return matrix.matrix
    m = np.asarray(matrix, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"matrix must be square, got shape {m.shape}")
    if m.shape[0] > MAX_EXACT_DIM:
        raise DimensionError(f"matrix dimension {m.shape[0]} exceeds cap {MAX_EXACT_DIM}")
    return m


def permanent(matrix: np.ndarray | InterferometerMatrix) -> complex:
    """Exact permanent of a small complex matrix.

    Direct expansion up to 3x3, Ryser's inclusion-exclusion formula above
    that (O(2^n n) with running row sums).
    """
    m = _as_square(matrix)
    n = m.shape[0]
    if n == 1:
        return complex(m[0, 0])
    if n == 2:
        return complex(m[0, 0] * m[1, 1] + m[0, 1] * m[1, 0])
    if n == 3:
        return complex(
            m[0, 0] * m[1, 1] * m[2, 2]
            + m[0, 0] * m[1, 2] * m[2, 1]
            + m[0, 1] * m[1, 0] * m[2, 2]
            + m[0, 1] * m[1, 2] * m[2, 0]
            + m[0, 2] * m[1, 0] * m[2, 1]
            + m[0, 2] * m[1, 1] * m[2, 0]
        )
    total = 0.0 + 0.0j
    for subset in range(1, 1 << n):
        sign = 1 - 2 * (bin(subset).count("1") & 1)
        row_prod = 1.0 + 0.0j
        for i in range(n):
            row_sum = 0.0 + 0.0j
            for j in range(n):
                if subset & (1 << j):
                    row_sum += m[i, j]
            row_prod *= row_sum
        total += sign * row_prod
    if n & 1:
        total = -total
    return complex(total)


def determinant(matrix: np.ndarray | InterferometerMatrix) -> complex:
    """Exact determinant by Laplace expansion with column-subset memoization
    (no LU factorization, no pivoting artifacts on these tiny matrices)."""
    m = _as_square(matrix)
    n = m.shape[0]
    if n == 1:
        return complex(m[0, 0])
    if n == 2:
        return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])

    cols = list(range(n))
    cache: dict[int, complex] = {}

    def minor(row: int, colmask: int) -> complex:
        if row == n:
            return 1.0 + 0.0j
        hit = cache.get(colmask)
        if hit is not None:
            return hit
        total = 0.0 + 0.0j
        sign = 1.0
        for j in cols:
            bit = 1 << j
            if not (colmask & bit):
                continue
            # sign alternates with the column's position among the still
            # active columns, not with its absolute index
            total += sign * m[row, j] * minor(row + 1, colmask & ~bit)
            sign = -sign
        cache[colmask] = total
        return total

    return complex(minor(0, (1 << n) - 1))
