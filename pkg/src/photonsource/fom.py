"""Source figure-of-merit aggregation and comparison datasets.

Collects (brightness, overlap, purity) triples under a single polarized
brightness convention, evaluates the multi-pair trade-off curve of a
heralded pair source over a brightness grid, and exports everything as
one comma-delimited dataset for plotting and golden-file tests.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

from .errors import DomainError
from .spdc import SpdcSetup, SqueezedPairSource, default_profile, effective_indistinguishability, heralded_g2
from .tcspc import Measured

SOURCE_KINDS = ("qd_nonresonant", "qd_resonant", "spdc")
_CURVE_LABEL = "spdc-limit"
_CURVE_KIND = "spdc_limit"

COMPARISON_COLUMNS = (
    "label",
    "brightness",
    "sigma_brightness",
    "overlap_raw",
    "sigma_overlap_raw",
    "overlap_corrected",
    "sigma_overlap_corrected",
    "g2",
    "sigma_g2",
    "kind",
)


def _check_unit_range(m: Measured, name: str) -> None:
    # nan marks a value the source never reported; it passes by convention
    if m.value < -m.sigma or m.value > 1.0 + m.sigma:
        raise DomainError(f"{name} = {m.value!r} lies outside [0, 1] beyond its uncertainty")


@dataclass(frozen=True)
class FigureOfMerit:
    """One source's comparison coordinates, brightness in the polarized
    convention (photons per pulse into a single polarization mode)."""

    source_label: str
    brightness: Measured
    overlap_raw: Measured
    overlap_corrected: Measured
    g2: Measured
    source_kind: str

    def __post_init__(self) -> None:
        if not self.source_label:
            raise DomainError("source_label must be nonempty")
        if self.source_kind not in SOURCE_KINDS:
            raise DomainError(
                f"source_kind must be one of {SOURCE_KINDS}, got {self.source_kind!r}"
            )
        _check_unit_range(self.brightness, "brightness")
        _check_unit_range(self.overlap_raw, "overlap_raw")
        _check_unit_range(self.overlap_corrected, "overlap_corrected")
        _check_unit_range(self.g2, "g2")


@dataclass(frozen=True)
class SpdcLimitCurve:
    """Multi-pair trade-off of a heralded pair source at unit intrinsic
    overlap: mean pairs per pulse against overlap and heralded purity."""

    mean_pairs: tuple[float, ...]
    overlap: tuple[float, ...]
    g2: tuple[float, ...]

    def __post_init__(self) -> None:
        if not len(self.mean_pairs) == len(self.overlap) == len(self.g2):
            raise DomainError("curve columns must have equal length")


def polarized_brightness(raw: float, polarized: bool) -> float:
    """Brightness in the single-polarization convention: unpolarized
    emission counts half, already-polarized emission counts as is."""
    if not 0.0 <= raw <= 1.0:
        raise DomainError(f"raw brightness must lie in [0, 1], got {raw!r}")
    return raw if polarized else raw / 2.0


def spdc_limit_curve(setup: SpdcSetup, mean_pairs_grid) -> SpdcLimitCurve:
    """Evaluate the pair source's overlap and heralded g2 over a brightness
    grid in (0, 0.1], holding the intrinsic overlap at one so the curve
    shows the multi-pair limit alone."""
    grid = tuple(float(mu) for mu in mean_pairs_grid)
    if not grid:
        raise DomainError("mean-pairs grid must be nonempty")
    for mu in grid:
        if not 0.0 < mu <= 0.1:
            raise DomainError(f"mean pairs per pulse must lie in (0, 0.1], got {mu!r}")
    overlaps, purities = [], []
    for mu in grid:
        src = SqueezedPairSource.from_mean(mu)
        overlaps.append(effective_indistinguishability(src, setup, 1.0))
        purities.append(heralded_g2(src, setup))
    return SpdcLimitCurve(mean_pairs=grid, overlap=tuple(overlaps), g2=tuple(purities))


# -----------------------------------------------------------------------
# published comparison fixtures
# -----------------------------------------------------------------------

# The corrected overlap of the brightest resonant device also appears with
# a slightly different fit value in the supplementary material; both are
# carried, the main-text one in the reference row.
QD3_OVERLAP_CORRECTED_ALT = Measured(0.9945, 0.0045)

_NAN = float("nan")


def reference_sources() -> tuple[FigureOfMerit, ...]:
    """Published comparison points, brightness already polarized.

    The last three entries reproduce open literature symbols whose
    coordinates are read off a comparison figure rather than tabulated;
    their labels say so and their uncertainties reflect reading error.
    """
    return (
        FigureOfMerit(
            "QD1",
            brightness=Measured(polarized_brightness(0.65, False), 0.035),
            overlap_raw=Measured(0.74, 0.07),
            overlap_corrected=Measured(0.78, 0.07),
            g2=Measured(0.024, 0.007),
            source_kind="qd_nonresonant",
        ),
        FigureOfMerit(
            "QD2",
            brightness=Measured(polarized_brightness(0.35, False), 0.015),
            overlap_raw=Measured(0.68, 0.081),
            overlap_corrected=Measured(0.77, 0.08),
            g2=Measured(0.047, 0.009),
            source_kind="qd_nonresonant",
        ),
        FigureOfMerit(
            "QD3",
            brightness=Measured(polarized_brightness(0.16, True), 0.02),
            overlap_raw=Measured(0.989, 0.004),
            overlap_corrected=Measured(0.9956, 0.0045),
            g2=Measured(0.0028, 0.0012),
            source_kind="qd_resonant",
        ),
        FigureOfMerit(
            "QD4",
            brightness=Measured(polarized_brightness(0.08, True), 0.01),
            overlap_raw=Measured(0.973, 0.026),
            overlap_corrected=Measured(0.979, 0.026),
            g2=Measured(0.0035, 0.0040),
            source_kind="qd_resonant",
        ),
        FigureOfMerit(
            "SPDC mu=0.015",
            brightness=Measured(0.015, 0.0),
            overlap_raw=Measured(0.9795, 0.0005),
            overlap_corrected=Measured(0.9795, 0.0005),
            g2=Measured(_NAN),
            source_kind="spdc",
        ),
        FigureOfMerit(
            "lit micropillar (figure-derived)",
            brightness=Measured(polarized_brightness(0.79, False), 0.05),
            overlap_raw=Measured(0.82, 0.05),
            overlap_corrected=Measured(_NAN),
            g2=Measured(_NAN),
            source_kind="qd_nonresonant",
        ),
        FigureOfMerit(
            "lit resonant QD (figure-derived)",
            brightness=Measured(0.05, 0.03),
            overlap_raw=Measured(0.96, 0.03),
            overlap_corrected=Measured(_NAN),
            g2=Measured(_NAN),
            source_kind="qd_resonant",
        ),
        FigureOfMerit(
            "lit nonresonant QD (figure-derived)",
            brightness=Measured(polarized_brightness(0.46, False), 0.05),
            overlap_raw=Measured(0.87, 0.05),
            overlap_corrected=Measured(_NAN),
            g2=Measured(_NAN),
            source_kind="qd_nonresonant",
        ),
    )


def default_limit_curve(n_points: int = 30) -> SpdcLimitCurve:
    """Trade-off curve of the calibrated default profile on a log grid."""
    if n_points < 2:
        raise DomainError("need at least two grid points")
    lo, hi = math.log(0.001), math.log(0.1)
    grid = [math.exp(lo + (hi - lo) * i / (n_points - 1)) for i in range(n_points)]
    grid[-1] = 0.1
    return spdc_limit_curve(default_profile(), grid)


# -----------------------------------------------------------------------
# dataset export
# -----------------------------------------------------------------------


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def export_comparison(points, curve: SpdcLimitCurve | None, path) -> None:
    """Write one comma-delimited dataset: a row per source, then the limit
    curve as rows with kind 'spdc_limit' mapping mean pairs per pulse onto
    the brightness column.  UTF-8, LF endings, floats at 17 significant
    digits so a read-back is lossless."""
    points = tuple(points)
    if not points:
        raise DomainError("need at least one comparison point")
    with open(path, "w", encoding="utf-8", newline="") as out:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(COMPARISON_COLUMNS)
        for p in points:
            writer.writerow(
                (
                    p.source_label,
                    _fmt(p.brightness.value),
                    _fmt(p.brightness.sigma),
                    _fmt(p.overlap_raw.value),
                    _fmt(p.overlap_raw.sigma),
                    _fmt(p.overlap_corrected.value),
                    _fmt(p.overlap_corrected.sigma),
                    _fmt(p.g2.value),
                    _fmt(p.g2.sigma),
                    p.source_kind,
                )
            )
        if curve is not None:
            for mu, m, g2 in zip(curve.mean_pairs, curve.overlap, curve.g2):
                writer.writerow(
                    (
                        _CURVE_LABEL,
                        _fmt(mu), _fmt(0.0),
                        _fmt(m), _fmt(0.0),
                        _fmt(m), _fmt(0.0),
                        _fmt(g2), _fmt(0.0),
                        _CURVE_KIND,
                    )
                )


def read_comparison(path) -> tuple[tuple[FigureOfMerit, ...], SpdcLimitCurve | None]:
    """Inverse of export_comparison."""
    with open(path, encoding="utf-8", newline="") as src:
        reader = csv.reader(src)
        header = tuple(next(reader, ()))
        if header != COMPARISON_COLUMNS:
            raise DomainError(f"unexpected dataset header {header!r}")
        points = []
        mu, overlap, g2 = [], [], []
        for row in reader:
            if len(row) != len(COMPARISON_COLUMNS):
                raise DomainError(f"malformed dataset row {row!r}")
            if row[-1] == _CURVE_KIND:
                mu.append(float(row[1]))
                overlap.append(float(row[3]))
                g2.append(float(row[7]))
                continue
            points.append(
                FigureOfMerit(
                    source_label=row[0],
                    brightness=Measured(float(row[1]), float(row[2])),
                    overlap_raw=Measured(float(row[3]), float(row[4])),
                    overlap_corrected=Measured(float(row[5]), float(row[6])),
                    g2=Measured(float(row[7]), float(row[8])),
                    source_kind=row[9],
                )
            )
    curve = (
        SpdcLimitCurve(tuple(mu), tuple(overlap), tuple(g2)) if mu else None
    )
    return tuple(points), curve
