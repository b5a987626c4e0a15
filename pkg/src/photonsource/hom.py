"""Two-photon interference at a (near-)unitary splitter.

The coincidence rule for one photon in each input port interpolates
between the bosonic term |per(L)|^2 and the distinguishable term
|det(L)|^2 with the mean wavepacket overlap M:

    c(M) = (1 + M)/2 |per(L)|^2 + (1 - M)/2 |det(L)|^2

For real splitters built from measured intensity transmissions the two
terms also set the maximum achievable visibility (D - P)/(D + P) and the
conversion from a measured visibility back to M.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateSetupError, DomainError
from .fock import InterferometerMatrix, determinant, permanent

__all__ = [
    "HomSetup",
    "VisibilityResult",
    "PeakAreas",
    "coincidence_probability",
    "max_visibility",
    "visibility_to_overlap",
    "matrix_from_transmissions",
    "expected_peak_areas",
    "overlap_from_area_ratio",
    "area_ratio_from_overlap",
]

_DEGENERATE_TOL = 1e-9


@dataclass(frozen=True)
class HomSetup:
    """Interference measurement geometry.

    classical_visibility is the first-order fringe contrast of the
    interferometer (1 - epsilon); pulse_pair_delay is the separation of
    the two excitation pulses within one cycle (ns), rep_period the laser
    cycle (ns).
    """

    matrix: InterferometerMatrix
    classical_visibility: float = 1.0
    pulse_pair_delay: float = 3.0
    rep_period: float = 12.2

    def __post_init__(self) -> None:
        if self.matrix.dim != 2:
            raise DomainError("interference setup needs a 2x2 splitter matrix")
        if not 0.0 <= self.classical_visibility <= 1.0:
            raise DomainError("classical_visibility must lie in [0, 1]")
        if self.pulse_pair_delay < 0.0:
            raise DomainError("pulse_pair_delay must be >= 0")
        if self.rep_period <= 0.0:
            raise DomainError("rep_period must be > 0")
        if self.pulse_pair_delay >= self.rep_period / 2.0:
            raise DomainError("pulse_pair_delay must be well inside the cycle")

    @classmethod
    def from_splitting(
        cls,
        reflectance: float,
        transmittance: float,
        classical_visibility: float = 1.0,
        pulse_pair_delay: float = 3.0,
        rep_period: float = 12.2,
        warn_threshold: float | None = 0.05,
    ) -> "HomSetup":
        matrix = matrix_from_transmissions(
            reflectance, transmittance, transmittance, reflectance,
            warn_threshold=warn_threshold,
        )
        return cls(matrix, classical_visibility, pulse_pair_delay, rep_period)

    @property
    def reflectance(self) -> float:
        return float(abs(self.matrix.matrix[0, 0]) ** 2)

    @property
    def transmittance(self) -> float:
        return float(abs(self.matrix.matrix[0, 1]) ** 2)


@dataclass(frozen=True)
class VisibilityResult:
    """A measured visibility and the overlap it converts to."""

    raw_visibility: float
    mean_wavepacket_overlap: float
    sigma_overlap: float = 0.0
    det_sq: float = float("nan")
    per_sq: float = float("nan")


@dataclass(frozen=True)
class PeakAreas:
    """Expected coincidence-peak areas per excitation cycle.

    Units: detected-photon-pair probability per cycle with the per-photon
    detection probability factored out; the synthesizer scales them with
    the actual pair flux.  a_0 / a_minus / a_plus are the inner cluster
    (delays 0 and -/+ the pulse-pair delay), a_outer the +-2 delay
    satellites of the inner cluster, a_far the tallest peak of a far
    (uncorrelated) cluster.
    """

    a_0: float
    a_minus: float
    a_plus: float
    a_outer: float
    a_far: float


def _interference_terms(matrix: InterferometerMatrix) -> tuple[float, float]:
    d = abs(determinant(matrix)) ** 2
    p = abs(permanent(matrix)) ** 2
    return d, p


def coincidence_probability(matrix: InterferometerMatrix, overlap: float) -> float:
    """Coincidence probability for one photon in each input port."""
    if not 0.0 <= overlap <= 1.0:
        raise DomainError("overlap must lie in [0, 1]")
    d, p = _interference_terms(matrix)
    return 0.5 * (1.0 + overlap) * p + 0.5 * (1.0 - overlap) * d


def max_visibility(matrix: InterferometerMatrix) -> float:
    """Highest visibility the splitter allows, (D - P)/(D + P)."""
    d, p = _interference_terms(matrix)
    return (d - p) / (d + p)


def visibility_to_overlap(
    visibility: float,
    matrix: InterferometerMatrix,
    sigma_visibility: float = 0.0,
) -> VisibilityResult:
    """Convert a raw interference visibility to mean wavepacket overlap,
    M = v (D + P)/(D - P).

    Values above the splitter bound produce M > 1 and are reported as-is;
    deciding whether that is noise is the caller's job.
    """
    d, p = _interference_terms(matrix)
    if abs(d - p) < _DEGENERATE_TOL:
        raise DegenerateSetupError(
            "splitter has |det|^2 == |per|^2, visibility carries no overlap information"
        )
    scale = (d + p) / (d - p)
    return VisibilityResult(
        raw_visibility=float(visibility),
        mean_wavepacket_overlap=scale * visibility,
        sigma_overlap=abs(scale) * sigma_visibility,
        det_sq=d,
        per_sq=p,
    )


def matrix_from_transmissions(
    t11: float, t12: float, t21: float, t22: float, warn_threshold: float | None = 0.05
) -> InterferometerMatrix:
    """Build the splitter matrix from four measured intensity transmissions,
    [[sqrt(t11), sqrt(t12)], [sqrt(t21), -sqrt(t22)]].

    The minus sign carries the splitter phase convention; the result is
    only as unitary as the measured transmissions are consistent.  Raise
    ``warn_threshold`` (or pass None) when a lossy splitter is intentional.
    """
    for name, t in (("t11", t11), ("t12", t12), ("t21", t21), ("t22", t22)):
        if not 0.0 <= t <= 1.0:
            raise DomainError(f"{name} must lie in [0, 1], got {t!r}")
    m = np.array(
        [
            [np.sqrt(t11), np.sqrt(t12)],
            [np.sqrt(t21), -np.sqrt(t22)],
        ]
    )
    return InterferometerMatrix(m, warn_threshold=warn_threshold)


# -----------------------------------------------------------------------
# peak-area algebra for double-pulse interference histograms
# -----------------------------------------------------------------------
#
# Both excitation pulses are split 50:50 into a short and a delayed path,
# so only the (late photon, short path) x (early photon, long path) combo
# overlaps at the splitter and feeds the zero-delay peak.  Multiphoton
# emission (g2 > 0) adds uncorrelated-like coincidences to the center and
# side peaks.  The algebra below is the exact inverse of
# overlap_from_area_ratio, which the extraction relies on.


def area_ratio_from_overlap(
    reflectance: float,
    transmittance: float,
    classical_visibility: float,
    overlap: float,
    g2: float,
) -> float:
    """Expected A_0 / (A_minus + A_plus) for given overlap and g2."""
    r, t = reflectance, transmittance
    if r <= 0.0 or t <= 0.0:
        raise DomainError("splitting ratios must be positive")
    sq = (r * r + t * t) / (r * t)
    meff = classical_visibility**2 * overlap
    return (2.0 * g2 + 0.5 * sq - meff) / (2.0 + g2 * sq)


def overlap_from_area_ratio(
    ratio: float,
    reflectance: float,
    transmittance: float,
    classical_visibility: float,
    g2: float,
) -> float:
    """Mean wavepacket overlap from the measured A_0 / (A_minus + A_plus).

    M = [2 g2 + (R^2+T^2)/(2RT) - ratio (2 + g2 (R^2+T^2)/(RT))] / (1-eps)^2
    with R, T the splitter intensity ratios used as given (they need not
    sum to one) and (1-eps) the classical visibility.
    """
    r, t = reflectance, transmittance
    if r <= 0.0 or t <= 0.0:
        raise DomainError("splitting ratios must be positive")
    if classical_visibility <= 0.0:
        raise DegenerateSetupError("zero classical visibility, overlap unrecoverable")
    sq = (r * r + t * t) / (r * t)
    return (2.0 * g2 + 0.5 * sq - ratio * (2.0 + g2 * sq)) / classical_visibility**2


def expected_peak_areas(setup: HomSetup, overlap: float, g2: float) -> PeakAreas:
    """Forward model for the five inner coincidence peaks plus the
    uncorrelated far-peak level."""
    if not 0.0 <= overlap <= 1.0:
        raise DomainError("overlap must lie in [0, 1]")
    if not 0.0 <= g2 <= 2.0:
        raise DomainError("g2 must lie in [0, 2]")
    r, t = setup.reflectance, setup.transmittance
    meff = setup.classical_visibility**2 * overlap
    a_side = 0.5 * r * t + 0.25 * g2 * (r * r + t * t)
    a_0 = g2 * r * t + 0.25 * (r * r + t * t) - 0.5 * meff * r * t
    return PeakAreas(
        a_0=a_0,
        a_minus=a_side,
        a_plus=a_side,
        a_outer=0.5 * a_side,
        a_far=3.0 * r * t,
    )
