"""Pulsed coincidence-histogram synthesis and analysis.

The forward model lays two-sided-exponential peaks on a repetition-period
grid (a single-pulse autocorrelation cluster per period, or five-peak
clusters for the double-pulse interference arrangement), adds a flat
accidental baseline, and draws Poisson counts.  The fitter solves peak
areas and baseline linearly inside a nonlinear search over the two decay
constants, then propagates Poisson count errors through the linear
algebra to the extracted purity and overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares

from .errors import ConvergenceError, DegenerateSetupError, DomainError
from .hom import HomSetup, expected_peak_areas, overlap_from_area_ratio

DEFAULT_BIN_NS = 0.05
DEFAULT_DECAY_NS = 0.15
DEFAULT_SIDE_CLUSTERS = 3

_FORMAT_TAG = "correlation-histogram v1"


@dataclass(frozen=True)
class Measured:
    """A value with a one-standard-deviation uncertainty."""

    value: float
    sigma: float = 0.0

    def __post_init__(self) -> None:
        if self.sigma < 0.0:
            raise DomainError("sigma must be nonnegative")


@dataclass(frozen=True)
class SourceTruth:
    """Ground truth fed to the synthesizer."""

    overlap: float
    g2: float

    def __post_init__(self) -> None:
        for name in ("overlap", "g2"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {v!r}")


@dataclass(frozen=True)
class HbtSetup:
    """Single-pulse autocorrelation arrangement: only the period matters."""

    rep_period: float

    def __post_init__(self) -> None:
        if self.rep_period <= 0.0:
            raise DomainError("rep_period must be positive")


@dataclass(frozen=True)
class CountRates:
    """Per-detector signal count rate and dark-count rate, both in Hz."""

    signal_hz: float
    dark_hz: float = 0.0

    def __post_init__(self) -> None:
        if self.signal_hz < 0.0 or self.dark_hz < 0.0:
            raise DomainError("count rates must be nonnegative")


@dataclass(frozen=True)
class CorrelationHistogram:
    bin_width: float
    counts: np.ndarray
    delay_origin: float
    rep_period: float
    pulse_pair_delay: float
    acquisition_time: float

    def __post_init__(self) -> None:
        counts = np.array(self.counts)
        if counts.ndim != 1 or counts.size == 0:
            raise DomainError("counts must be a nonempty 1-d array")
        if np.any(counts < 0) or not np.issubdtype(counts.dtype, np.integer):
            raise DomainError("counts must be nonnegative integers")
        counts = counts.astype(np.int64)
        counts.flags.writeable = False
        object.__setattr__(self, "counts", counts)
        if self.bin_width <= 0.0 or self.rep_period <= 0.0 or self.acquisition_time <= 0.0:
            raise DomainError("bin_width, rep_period and acquisition_time must be positive")
        if self.pulse_pair_delay < 0.0:
            raise DomainError("pulse_pair_delay must be nonnegative")

    @property
    def n_bins(self) -> int:
        return self.counts.size

    @property
    def edges(self) -> np.ndarray:
        return self.delay_origin + self.bin_width * np.arange(self.n_bins + 1)

    @property
    def delays(self) -> np.ndarray:
        """Bin centers."""
        return self.delay_origin + self.bin_width * (np.arange(self.n_bins) + 0.5)


@dataclass(frozen=True)
class FittedPeak:
    center: float
    area: float
    sigma_area: float
    decay_left: float
    decay_right: float


@dataclass(frozen=True)
class PeakFit:
    peaks: tuple[FittedPeak, ...]
    baseline: float
    sigma_baseline: float
    residual_norm: float
    rep_period: float
    pulse_pair_delay: float
    # covariance of (areas..., baseline) in peak order; Poisson-propagated
    area_covariance: np.ndarray = field(repr=False, default=None)


@dataclass(frozen=True)
class ExtractionResult:
    g2: Measured
    overlap_raw: Measured
    overlap_corrected: Measured


# -----------------------------------------------------------------------
# peak layout and shape
# -----------------------------------------------------------------------


def _peak_bin_integrals(
    edges: np.ndarray, center: float, tau_l: float, tau_r: float
) -> np.ndarray:
    """Exact per-bin mass of a unit-area two-sided exponential peak."""
    x = edges - center
    w = tau_l + tau_r
    left = tau_l / w * np.exp(np.minimum(x, 0.0) / tau_l)
    right = 1.0 - tau_r / w * np.exp(-np.maximum(x, 0.0) / tau_r)
    return np.diff(np.where(x < 0.0, left, right))


def _cluster_offsets(pulse_pair_delay: float) -> list[float]:
    if pulse_pair_delay == 0.0:
        return [0.0]
    d = pulse_pair_delay
    return [-2.0 * d, -d, 0.0, d, 2.0 * d]


def _peak_centers(
    lo: float, hi: float, rep_period: float, pulse_pair_delay: float
) -> list[float]:
    """All peak positions of the metadata's grid inside [lo, hi]."""
    centers = []
    k_min = math.floor(lo / rep_period) - 1
    k_max = math.ceil(hi / rep_period) + 1
    for k in range(k_min, k_max + 1):
        for offset in _cluster_offsets(pulse_pair_delay):
            c = k * rep_period + offset
            if lo <= c <= hi:
                centers.append(c)
    return centers


def _inner_cluster_index(centers: list[float], rep_period: float) -> list[int]:
    return [i for i, c in enumerate(centers) if abs(c) < rep_period / 2.0]


# -----------------------------------------------------------------------
# synthesis
# -----------------------------------------------------------------------


def _expected_intensity(
    truth: SourceTruth,
    setup,
    rates: CountRates,
    acquisition_time: float,
    bin_width: float,
    decay_left: float,
    decay_right: float,
    n_side_clusters: int,
):
    if isinstance(setup, HbtSetup):
        rep, delta = setup.rep_period, 0.0
    elif isinstance(setup, HomSetup):
        rep, delta = setup.rep_period, setup.pulse_pair_delay
        if not delta > 0.0:
            raise DomainError("interference synthesis needs a nonzero pulse_pair_delay")
        # keeps every cluster peak inside its own half-period window
        if delta >= rep / 4.0:
            raise DomainError("pulse_pair_delay must stay below rep_period/4")
    else:
        raise DomainError(f"unsupported setup type {type(setup).__name__}")

    k = n_side_clusters
    origin = -(k + 0.5) * rep
    n_bins = int(round((2 * k + 1) * rep / bin_width))
    edges = origin + bin_width * np.arange(n_bins + 1)

    # per-pulse per-detector click probability anchors the pair flux
    per_pulse = rates.signal_hz / 2.0 * (rep * 1e-9)
    pair_flux = acquisition_time / (rep * 1e-9) * per_pulse**2

    if isinstance(setup, HbtSetup):
        cluster = {0.0: truth.g2}
        far = {0.0: 1.0}
    else:
        areas = expected_peak_areas(setup, truth.overlap, truth.g2)
        d = delta
        cluster = {
            -2.0 * d: areas.a_outer,
            -d: areas.a_minus,
            0.0: areas.a_0,
            d: areas.a_plus,
            2.0 * d: areas.a_outer,
        }
        far = {
            -2.0 * d: areas.a_far / 6.0,
            -d: 2.0 * areas.a_far / 3.0,
            0.0: areas.a_far,
            d: 2.0 * areas.a_far / 3.0,
            2.0 * d: areas.a_far / 6.0,
        }

    lam = np.zeros(n_bins)
    peak_list = []
    for kk in range(-k, k + 1):
        pattern = cluster if kk == 0 else far
        for offset, area in pattern.items():
            counts = pair_flux * area
            peak_list.append((kk * rep + offset, counts))
            lam += counts * _peak_bin_integrals(edges, kk * rep + offset, decay_left, decay_right)

    dark = rates.dark_hz
    baseline_rate = rates.signal_hz * dark + dark * dark  # accidentals per s^2
    lam += acquisition_time * (bin_width * 1e-9) * baseline_rate
    return lam, origin, rep, delta, peak_list


def synthesize_histogram(
    truth: SourceTruth,
    setup,
    rates: CountRates,
    acquisition_time: float,
    seed: int | None,
    *,
    bin_width: float = DEFAULT_BIN_NS,
    decay_left: float = DEFAULT_DECAY_NS,
    decay_right: float = DEFAULT_DECAY_NS,
    n_side_clusters: int = DEFAULT_SIDE_CLUSTERS,
) -> CorrelationHistogram:
    """Forward-model a coincidence histogram.

    ``setup`` selects the arrangement: HbtSetup gives one peak per period
    with the center one scaled by g2; HomSetup gives five-peak clusters
    with the inner cluster following the expected interference areas.
    ``seed`` draws Poisson counts; None returns the rounded expectation
    (for law-of-large-numbers and recovery checks).  Times in ns, rates
    in Hz, acquisition in seconds.
    """
    if acquisition_time <= 0.0:
        raise DomainError("acquisition_time must be positive")
    if decay_left <= 0.0 or decay_right <= 0.0 or bin_width <= 0.0:
        raise DomainError("decay constants and bin width must be positive")
    lam, origin, rep, delta, _ = _expected_intensity(
        truth, setup, rates, acquisition_time, bin_width, decay_left, decay_right,
        n_side_clusters,
    )
    if seed is None:
        counts = np.rint(lam).astype(np.int64)
    else:
        counts = np.random.default_rng(seed).poisson(lam).astype(np.int64)
    return CorrelationHistogram(
        bin_width=bin_width,
        counts=counts,
        delay_origin=origin,
        rep_period=rep,
        pulse_pair_delay=delta,
        acquisition_time=acquisition_time,
    )


# -----------------------------------------------------------------------
# fitting
# -----------------------------------------------------------------------


def _design_matrix(edges, centers, tau_l, tau_r):
    cols = [_peak_bin_integrals(edges, c, tau_l, tau_r) for c in centers]
    cols.append(np.ones(edges.size - 1))
    return np.column_stack(cols)


def _weighted_solve(design, y, weights):
    sw = np.sqrt(weights)
    coef, *_ = np.linalg.lstsq(design * sw[:, None], y * sw, rcond=None)
    return coef


def fit_histogram(hist: CorrelationHistogram, *, max_iterations: int = 200) -> PeakFit:
    """Separable least squares: linear peak areas and baseline inside a
    nonlinear search over the shared left/right decay constants.

    Weights start at the per-bin Poisson estimate 1/max(count, 1) and are
    re-derived from the fitted model before the final solve, which keeps
    the baseline estimate unbiased.  The final areas obey the
    nonnegativity invariant, and their covariance is the weighted
    normal-equations inverse (absolute Poisson errors, no residual
    rescaling).
    """
    y = hist.counts.astype(float)
    if not np.any(y > 0):
        raise DegenerateSetupError("histogram is empty; nothing to fit")
    edges = hist.edges
    centers = _peak_centers(
        edges[0], edges[-1], hist.rep_period, hist.pulse_pair_delay
    )
    if not centers:
        raise DegenerateSetupError("no peak positions fall inside the histogram window")
    lo = math.log(hist.bin_width / 5.0)
    hi = math.log(hist.rep_period / 2.0)

    def solve_decays(weights, x0_list):
        sw = np.sqrt(weights)

        def residual(theta):
            design = _design_matrix(edges, centers, math.exp(theta[0]), math.exp(theta[1]))
            coef = _weighted_solve(design, y, weights)
            return sw * (design @ coef - y)

        best = None
        for x0 in x0_list:
            sol = least_squares(
                residual,
                x0=x0,
                bounds=([lo, lo], [hi, hi]),
                jac="3-point",
                xtol=1e-14,
                ftol=1e-14,
                gtol=1e-12,
                max_nfev=max_iterations,
            )
            if best is None or sol.cost < best.cost:
                best = sol
        if best.status <= 0:
            raise ConvergenceError(f"decay search did not converge: {best.message}")
        return best

    starts = sorted(
        {
            min(max(math.log(t), lo), hi)
            for t in (2.0 * hist.bin_width, DEFAULT_DECAY_NS, hist.rep_period / 50.0)
        }
    )
    # data-driven weights bias the decay search (empty tail bins carry
    # full weight), so re-derive weights from the fitted model and repeat
    weights = 1.0 / np.maximum(y, 1.0)
    best = solve_decays(weights, [(t0, t0) for t0 in starts])
    for _ in range(2):
        design = _design_matrix(edges, centers, math.exp(best.x[0]), math.exp(best.x[1]))
        model = design @ _weighted_solve(design, y, weights)
        weights = 1.0 / np.maximum(model, 1.0)
        best = solve_decays(weights, [tuple(best.x)])
    tau_l, tau_r = math.exp(best.x[0]), math.exp(best.x[1])

    design = _design_matrix(edges, centers, tau_l, tau_r)
    coef = None
    for _ in range(3):
        coef = _weighted_solve(design, y, weights)
        weights = 1.0 / np.maximum(design @ coef, 1.0)
    # negative-going noise on empty peaks is truncated, not refitted, so
    # the baseline stays an unbiased estimate of the accidental rate
    coef = np.append(np.maximum(coef[:-1], 0.0), coef[-1])
    normal = design.T @ (design * weights[:, None])
    try:
        covariance = np.linalg.inv(normal)
    except np.linalg.LinAlgError:
        covariance = np.linalg.pinv(normal)
    covariance.flags.writeable = False
    sigma = np.sqrt(np.maximum(np.diag(covariance), 0.0))
    residual_norm = float(np.linalg.norm(np.sqrt(weights) * (y - design @ coef)))

    peaks = tuple(
        FittedPeak(
            center=c,
            area=float(coef[i]),
            sigma_area=float(sigma[i]),
            decay_left=tau_l,
            decay_right=tau_r,
        )
        for i, c in enumerate(centers)
    )
    return PeakFit(
        peaks=peaks,
        baseline=float(coef[-1]),
        sigma_baseline=float(sigma[-1]),
        residual_norm=residual_norm,
        rep_period=hist.rep_period,
        pulse_pair_delay=hist.pulse_pair_delay,
        area_covariance=covariance,
    )


# -----------------------------------------------------------------------
# extraction
# -----------------------------------------------------------------------


def _area_sigma(fit: PeakFit, grad: np.ndarray) -> float:
    # grad runs over (areas..., baseline)
    return float(math.sqrt(max(0.0, grad @ fit.area_covariance @ grad)))


def extract_g2(fit: PeakFit) -> Measured:
    """Center-peak area over the mean side-peak area, with Poisson error."""
    if fit.pulse_pair_delay != 0.0:
        raise DomainError("autocorrelation extraction needs a single-pulse fit")
    center_idx = [i for i, p in enumerate(fit.peaks) if abs(p.center) < fit.rep_period / 2.0]
    side_idx = [i for i in range(len(fit.peaks)) if i not in center_idx]
    if len(center_idx) != 1 or not side_idx:
        raise DegenerateSetupError("need one center peak and at least one side peak")
    a0 = fit.peaks[center_idx[0]].area
    side_mean = sum(fit.peaks[i].area for i in side_idx) / len(side_idx)
    if side_mean == 0.0:
        raise DegenerateSetupError("side peaks carry no counts")
    value = a0 / side_mean
    grad = np.zeros(len(fit.peaks) + 1)
    grad[center_idx[0]] = 1.0 / side_mean
    for i in side_idx:
        grad[i] = -a0 / (len(side_idx) * side_mean**2)
    return Measured(value, _area_sigma(fit, grad))


def extract_overlap(
    fit: PeakFit,
    setup: HomSetup,
    g2: Measured,
    *,
    sigma_reflectance: float = 0.0,
    sigma_transmittance: float = 0.0,
    sigma_classical_visibility: float = 0.0,
) -> ExtractionResult:
    """Invert the inner-cluster area ratio to the mean wavepacket overlap.

    The corrected overlap uses the measured g2; the raw one sets g2 to
    zero, matching the uncorrected values quoted alongside corrected
    ones.  First-order error propagation covers the three inner peak
    areas (with their fitted covariance), the g2 uncertainty, and
    optional splitter-calibration uncertainties.
    """
    if fit.pulse_pair_delay <= 0.0:
        raise DomainError("overlap extraction needs a double-pulse fit")
    delta = fit.pulse_pair_delay

    def peak_at(target: float) -> int:
        hits = [
            i for i, p in enumerate(fit.peaks) if abs(p.center - target) < delta / 4.0
        ]
        if len(hits) != 1:
            raise DegenerateSetupError(f"no unique fitted peak at delay {target:g}")
        return hits[0]

    i0, im, ip = peak_at(0.0), peak_at(-delta), peak_at(delta)
    a0 = fit.peaks[i0].area
    side_sum = fit.peaks[im].area + fit.peaks[ip].area
    if side_sum == 0.0:
        raise DegenerateSetupError("inner side peaks carry no counts")
    ratio = a0 / side_sum
    grad = np.zeros(len(fit.peaks) + 1)
    grad[i0] = 1.0 / side_sum
    grad[im] = grad[ip] = -ratio / side_sum
    sigma_ratio = _area_sigma(fit, grad)

    r, t = setup.reflectance, setup.transmittance
    cv = setup.classical_visibility
    sq = (r * r + t * t) / (r * t)

    def propagate(g2_value: float, sigma_g2: float) -> Measured:
        value = overlap_from_area_ratio(ratio, r, t, cv, g2_value)
        d_ratio = -(2.0 + g2_value * sq) / cv**2
        d_g2 = (2.0 - ratio * sq) / cv**2
        d_sq = (0.5 - ratio * g2_value) / cv**2
        dsq_dr = (r * r - t * t) / (r * r * t)
        dsq_dt = (t * t - r * r) / (t * t * r)
        d_eps = 2.0 * value / cv
        var = (
            (d_ratio * sigma_ratio) ** 2
            + (d_g2 * sigma_g2) ** 2
            + (d_sq * dsq_dr * sigma_reflectance) ** 2
            + (d_sq * dsq_dt * sigma_transmittance) ** 2
            + (d_eps * sigma_classical_visibility) ** 2
        )
        return Measured(value, math.sqrt(var))

    return ExtractionResult(
        g2=g2,
        overlap_raw=propagate(0.0, 0.0),
        overlap_corrected=propagate(g2.value, g2.sigma),
    )


# -----------------------------------------------------------------------
# histogram text format
# -----------------------------------------------------------------------

_HEADER_FIELDS = (
    "bin_width",
    "delay_origin",
    "rep_period",
    "pulse_pair_delay",
    "acquisition_time",
)


def write_histogram(hist: CorrelationHistogram, path) -> None:
    """Plain-text dump: '#' metadata header, then one 'delay count' line
    per bin.  Floats are rendered with repr for a bit-exact round trip."""
    mode = "hom" if hist.pulse_pair_delay > 0.0 else "hbt"
    lines = [f"# {_FORMAT_TAG}", f"# mode = {mode}"]
    lines.extend(f"# {name} = {getattr(hist, name)!r}" for name in _HEADER_FIELDS)
    lines.append("# columns: delay_ns count")
    delays = hist.delays
    lines.extend(f"{float(delays[i])!r} {int(hist.counts[i])}" for i in range(hist.n_bins))
    with open(path, "w", encoding="utf-8", newline="\n") as out:
        out.write("\n".join(lines) + "\n")


def read_histogram(path) -> CorrelationHistogram:
    meta: dict[str, float] = {}
    counts = []
    with open(path, encoding="utf-8") as src:
        first = src.readline().strip()
        if first != f"# {_FORMAT_TAG}":
            raise DomainError(f"not a {_FORMAT_TAG} file: {path}")
        for line in src:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if "=" not in body:
                    continue  # comment lines like the column legend
                key, _, value = body.partition("=")
                key = key.strip()
                if key == "mode":
                    continue
                if key not in _HEADER_FIELDS:
                    raise DomainError(f"unknown histogram header field {key!r}")
                meta[key] = float(value)
            else:
                counts.append(int(line.split()[1]))
    missing = [name for name in _HEADER_FIELDS if name not in meta]
    if missing:
        raise DomainError(f"histogram header is missing {missing}")
    return CorrelationHistogram(
        bin_width=meta["bin_width"],
        counts=np.array(counts, dtype=np.int64),
        delay_origin=meta["delay_origin"],
        rep_period=meta["rep_period"],
        pulse_pair_delay=meta["pulse_pair_delay"],
        acquisition_time=meta["acquisition_time"],
    )
