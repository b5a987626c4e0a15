"""Scenario-driven command line.

A scenario is a YAML mapping with a ``mode`` key, an optional integer
``seed`` (default 0), an optional ``output`` file name, and one block of
parameters per mode:

* ``spdc-curve``      heralded-pair trade-off curve over a brightness grid
* ``qd-brightness``   count-rate calibration to photons per pulse
* ``hom``             splitter algebra: peak areas, area ratio, overlap
* ``synthesize``      forward-model a coincidence histogram to a text file
* ``fit``             peak-fit a histogram file, write the peak table
* ``extract``         fit a histogram and report g2 and overlap
* ``compare``         export the source-comparison dataset

Unknown scenario keys are hard errors.  Input paths inside a scenario are
resolved relative to the scenario file; outputs land in ``--out`` (default:
the working directory).  Tabular outputs honour ``--format``; histograms
always use the self-describing text format of the histogram module.

Seed policy: every random draw derives from the single scenario seed.
Stage ``k`` of a scenario (counting the random stages it performs, in
declared order) draws from ``numpy.random.SeedSequence([seed, k])``; the
only random stage today is histogram synthesis, at ``k = 0``.  Identical
scenario and seed give byte-identical artifacts.

Exit codes: 0 success, 2 schema or parameter violation, 3 numerical
failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from . import fom
from .emitter import SetupCalibration, brightness_from_counts
from .errors import (
    ConvergenceError,
    DegenerateSetupError,
    DimensionError,
    DomainError,
    TruncationError,
)
from .hom import HomSetup, area_ratio_from_overlap, expected_peak_areas, max_visibility, overlap_from_area_ratio
from .spdc import SpdcSetup
from .tcspc import (
    CountRates,
    HbtSetup,
    Measured,
    SourceTruth,
    extract_g2,
    extract_overlap,
    fit_histogram,
    read_histogram,
    synthesize_histogram,
    write_histogram,
)

EXIT_OK = 0
EXIT_SCHEMA = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4

_MISSING = object()


class _Block:
    """One scenario mapping; every key must be consumed or close() fails."""

    def __init__(self, raw, path: str):
        if not isinstance(raw, dict):
            raise DomainError(f"scenario section '{path}' must be a mapping")
        self._raw = dict(raw)
        self.path = path

    def _describe(self, key: str) -> str:
        return f"'{self.path}.{key}'" if self.path else f"'{key}'"

    def take_float(self, key: str, default=_MISSING) -> float:
        v = self._pop(key, default)
        if v is default and default is not _MISSING:
            return v
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            raise DomainError(f"{self._describe(key)} must be a number")
        return float(v)

    def take_int(self, key: str, default=_MISSING) -> int:
        v = self._pop(key, default)
        if v is default and default is not _MISSING:
            return v
        if isinstance(v, bool) or not isinstance(v, int):
            raise DomainError(f"{self._describe(key)} must be an integer")
        return v

    def take_str(self, key: str, default=_MISSING) -> str:
        v = self._pop(key, default)
        if v is default and default is not _MISSING:
            return v
        if not isinstance(v, str):
            raise DomainError(f"{self._describe(key)} must be a string")
        return v

    def take_bool(self, key: str, default=_MISSING) -> bool:
        v = self._pop(key, default)
        if v is default and default is not _MISSING:
            return v
        if not isinstance(v, bool):
            raise DomainError(f"{self._describe(key)} must be true/false")
        return v

    def take_list(self, key: str, default=_MISSING) -> list:
        v = self._pop(key, default)
        if v is default and default is not _MISSING:
            return v
        if not isinstance(v, list):
            raise DomainError(f"{self._describe(key)} must be a list")
        return v

    def take_block(self, key: str, required: bool = True) -> "_Block | None":
        v = self._pop(key, _MISSING if required else None)
        if v is None:
            return None
        child = f"{self.path}.{key}" if self.path else key
        return _Block(v, child)

    def _pop(self, key: str, default):
        if key in self._raw:
            return self._raw.pop(key)
        if default is _MISSING:
            raise DomainError(f"missing required key {self._describe(key)}")
        return default

    def close(self) -> None:
        if self._raw:
            extra = ", ".join(sorted(self._raw))
            raise DomainError(f"unknown key(s) in scenario section '{self.path or '<top>'}': {extra}")


# -----------------------------------------------------------------------
# table output
# -----------------------------------------------------------------------


def _fmt_cell(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return format(v, ".17g")
    return str(v)


def _write_table(rows: list[dict], columns: tuple[str, ...], path: Path, fmt: str) -> None:
    lines = []
    if fmt == "csv":
        lines.append(",".join(columns))
        for row in rows:
            lines.append(",".join(_fmt_cell(row[c]) for c in columns))
    else:
        for row in rows:
            lines.append(json.dumps({c: row[c] for c in columns}, allow_nan=True))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _default_name(mode: str, fmt: str) -> str:
    return f"{mode}.{'csv' if fmt == 'csv' else 'jsonl'}"


def _grid_values(block: _Block) -> list[float]:
    values = block.take_list("values", default=None)
    if values is not None:
        block.close()
        grid = []
        for v in values:
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise DomainError(f"'{block.path}.values' entries must be numbers")
            grid.append(float(v))
        if not grid:
            raise DomainError(f"'{block.path}.values' must be nonempty")
        return grid
    start = block.take_float("start")
    stop = block.take_float("stop")
    points = block.take_int("points")
    spacing = block.take_str("spacing", default="log")
    block.close()
    if points < 2:
        raise DomainError(f"'{block.path}.points' must be at least 2")
    if spacing not in ("log", "linear"):
        raise DomainError(f"'{block.path}.spacing' must be 'log' or 'linear'")
    if spacing == "log":
        if start <= 0.0:
            raise DomainError(f"'{block.path}.start' must be > 0 for log spacing")
        lo, hi = math.log(start), math.log(stop)
        grid = [math.exp(lo + (hi - lo) * i / (points - 1)) for i in range(points)]
    else:
        grid = [start + (stop - start) * i / (points - 1) for i in range(points)]
    grid[0], grid[-1] = start, stop
    return grid


def _splitter_setup(block: _Block, pulse_pair_delay: float, rep_period: float) -> tuple[HomSetup, dict]:
    r = block.take_float("reflectance")
    t = block.take_float("transmittance")
    cv = block.take_float("classical_visibility", default=1.0)
    sigmas = {
        "sigma_reflectance": block.take_float("sigma_reflectance", default=0.0),
        "sigma_transmittance": block.take_float("sigma_transmittance", default=0.0),
        "sigma_classical_visibility": block.take_float("sigma_classical_visibility", default=0.0),
    }
    block.close()
    setup = HomSetup.from_splitting(
        r, t, cv,
        pulse_pair_delay=pulse_pair_delay,
        rep_period=rep_period,
        warn_threshold=None,
    )
    return setup, sigmas


# -----------------------------------------------------------------------
# mode runners
# -----------------------------------------------------------------------


def _run_spdc_curve(scn: _Block, seed: int, out_dir: Path, base: Path, fmt: str) -> str:
    out_name = scn.take_str("output", default=_default_name("spdc-curve", fmt))
    grid = _grid_values(scn.take_block("grid"))
    transmittance = scn.take_float("transmittance", default=None)
    scn.close()
    if transmittance is None:
        setup = fom.default_profile()
    else:
        setup = SpdcSetup(herald_transmittance=transmittance, signal_transmittance=transmittance)
    curve = fom.spdc_limit_curve(setup, grid)
    rows = [
        {"mean_pairs": mu, "overlap": m, "g2": g2}
        for mu, m, g2 in zip(curve.mean_pairs, curve.overlap, curve.g2)
    ]
    path = out_dir / out_name
    _write_table(rows, ("mean_pairs", "overlap", "g2"), path, fmt)
    return f"wrote {len(rows)}-point trade-off curve to {path}"


def _run_qd_brightness(scn: _Block, seed: int, out_dir: Path, base: Path, fmt: str) -> str:
    out_name = scn.take_str("output", default=_default_name("qd-brightness", fmt))
    devices = scn.take_list("devices")
    scn.close()
    if not devices:
        raise DomainError("'devices' must list at least one device")
    rows = []
    for i, raw in enumerate(devices):
        dev = _Block(raw, f"devices[{i}]")
        label = dev.take_str("label")
        rate = dev.take_float("count_rate_hz")
        cal = SetupCalibration(
            rep_rate_hz=dev.take_float("rep_rate_hz"),
            setup_efficiency=dev.take_float("setup_efficiency"),
            polarized=dev.take_bool("polarized", default=True),
        )
        dev.close()
        raw_b = brightness_from_counts(rate, cal)
        rows.append(
            {
                "label": label,
                "brightness_raw": raw_b,
                "brightness_polarized": fom.polarized_brightness(raw_b, cal.polarized),
            }
        )
    path = out_dir / out_name
    _write_table(rows, ("label", "brightness_raw", "brightness_polarized"), path, fmt)
    return f"wrote brightness table for {len(rows)} device(s) to {path}"


def _run_hom(scn: _Block, seed: int, out_dir: Path, base: Path, fmt: str) -> str:
    out_name = scn.take_str("output", default=_default_name("hom", fmt))
    source = scn.take_block("source")
    g2 = source.take_float("g2")
    overlap = source.take_float("overlap", default=None)
    ratio = source.take_float("area_ratio", default=None)
    source.close()
    setup, _ = _splitter_setup(scn.take_block("splitter"), 3.0, 12.2)
    scn.close()
    if (overlap is None) == (ratio is None):
        raise DomainError("'source' needs exactly one of 'overlap' or 'area_ratio'")
    if overlap is None:
        overlap = overlap_from_area_ratio(
            ratio, setup.reflectance, setup.transmittance, setup.classical_visibility, g2
        )
    else:
        ratio = area_ratio_from_overlap(
            setup.reflectance, setup.transmittance, setup.classical_visibility, overlap, g2
        )
    areas = expected_peak_areas(setup, overlap, g2)
    row = {
        "reflectance": setup.reflectance,
        "transmittance": setup.transmittance,
        "classical_visibility": setup.classical_visibility,
        "g2": g2,
        "overlap": overlap,
        "area_ratio": ratio,
        "a_0": areas.a_0,
        "a_minus": areas.a_minus,
        "a_plus": areas.a_plus,
        "a_outer": areas.a_outer,
        "a_far": areas.a_far,
        "max_visibility": max_visibility(setup.matrix),
    }
    path = out_dir / out_name
    _write_table([row], tuple(row), path, fmt)
    return f"wrote interference report (overlap = {overlap:.6g}) to {path}"


def _setup_from_block(block: _Block):
    kind = block.take_str("kind")
    rep_period = block.take_float("rep_period", default=12.2)
    if kind == "hbt":
        block.close()
        return HbtSetup(rep_period)
    if kind != "hom":
        raise DomainError(f"'{block.path}.kind' must be 'hbt' or 'hom'")
    delay = block.take_float("pulse_pair_delay")
    cv = block.take_float("classical_visibility", default=1.0)
    r = block.take_float("reflectance", default=0.5)
    t = block.take_float("transmittance", default=0.5)
    block.close()
    return HomSetup.from_splitting(
        r, t, cv, pulse_pair_delay=delay, rep_period=rep_period, warn_threshold=None
    )


def _run_synthesize(scn: _Block, seed: int, out_dir: Path, base: Path, fmt: str) -> str:
    out_name = scn.take_str("output", default="histogram.txt")
    truth_block = scn.take_block("truth")
    truth = SourceTruth(
        overlap=truth_block.take_float("overlap"), g2=truth_block.take_float("g2")
    )
    truth_block.close()
    setup = _setup_from_block(scn.take_block("setup"))
    rates_block = scn.take_block("rates")
    rates = CountRates(
        signal_hz=rates_block.take_float("signal_hz"),
        dark_hz=rates_block.take_float("dark_hz", default=0.0),
    )
    rates_block.close()
    acq = scn.take_block("acquisition")
    time_s = acq.take_float("time_s")
    kwargs = {
        "bin_width": acq.take_float("bin_width_ns", default=0.05),
        "decay_left": acq.take_float("decay_left_ns", default=0.15),
        "decay_right": acq.take_float("decay_right_ns", default=0.15),
        "n_side_clusters": acq.take_int("side_clusters", default=3),
    }
    acq.close()
    scn.close()
    hist = synthesize_histogram(
        truth, setup, rates, time_s, np.random.SeedSequence([seed, 0]), **kwargs
    )
    path = out_dir / out_name
    write_histogram(hist, path)
    return f"wrote {hist.n_bins}-bin histogram ({int(hist.counts.sum())} counts) to {path}"


def _peak_rows(fit) -> list[dict]:
    return [
        {
            "center": p.center,
            "area": p.area,
            "sigma_area": p.sigma_area,
            "decay_left": p.decay_left,
            "decay_right": p.decay_right,
        }
        for p in fit.peaks
    ]


def _run_fit(scn: _Block, seed: int, out_dir: Path, base: Path, fmt: str) -> str:
    out_name = scn.take_str("output", default=_default_name("fit", fmt))
    hist_path = base / scn.take_str("histogram")
    scn.close()
    fit = fit_histogram(read_histogram(hist_path))
    path = out_dir / out_name
    _write_table(
        _peak_rows(fit),
        ("center", "area", "sigma_area", "decay_left", "decay_right"),
        path,
        fmt,
    )
    return (
        f"fitted {len(fit.peaks)} peaks, baseline {fit.baseline:.6g} "
        f"+- {fit.sigma_baseline:.2g} per bin; wrote peak table to {path}"
    )


def _run_extract(scn: _Block, seed: int, out_dir: Path, base: Path, fmt: str) -> str:
    out_name = scn.take_str("output", default=_default_name("extract", fmt))
    hist_path = base / scn.take_str("histogram")
    splitter = scn.take_block("splitter", required=False)
    g2_block = scn.take_block("g2", required=False)
    scn.close()

    hist = read_histogram(hist_path)
    fit = fit_histogram(hist)
    rows = []
    if hist.pulse_pair_delay == 0.0:
        if splitter is not None or g2_block is not None:
            raise DomainError("'splitter'/'g2' only apply to interference histograms")
        g2 = extract_g2(fit)
        rows.append({"quantity": "g2", "value": g2.value, "sigma": g2.sigma})
        summary = f"g2 = {g2.value:.4g} +- {g2.sigma:.2g}"
    else:
        if splitter is None or g2_block is None:
            raise DomainError(
                "interference histograms need 'splitter' and 'g2' scenario sections"
            )
        g2 = Measured(g2_block.take_float("value"), g2_block.take_float("sigma", default=0.0))
        g2_block.close()
        setup, sigmas = _splitter_setup(splitter, hist.pulse_pair_delay, hist.rep_period)
        result = extract_overlap(fit, setup, g2, **sigmas)
        rows.append({"quantity": "g2", "value": result.g2.value, "sigma": result.g2.sigma})
        for name, m in (
            ("overlap_raw", result.overlap_raw),
            ("overlap_corrected", result.overlap_corrected),
        ):
            rows.append({"quantity": name, "value": m.value, "sigma": m.sigma})
        summary = (
            f"overlap_corrected = {result.overlap_corrected.value:.4g} "
            f"+- {result.overlap_corrected.sigma:.2g}"
        )
    path = out_dir / out_name
    _write_table(rows, ("quantity", "value", "sigma"), path, fmt)
    return f"{summary}; wrote report to {path}"


def _run_compare(scn: _Block, seed: int, out_dir: Path, base: Path, fmt: str) -> str:
    out_name = scn.take_str("output", default=_default_name("compare", fmt))
    curve_block = scn.take_block("curve", required=False)
    scn.close()
    points = fom.reference_sources()
    curve = None
    if curve_block is not None:
        curve = fom.spdc_limit_curve(fom.default_profile(), _grid_values(curve_block))
    path = out_dir / out_name
    if fmt == "csv":
        fom.export_comparison(points, curve, path)
    else:
        rows = []
        for p in points:
            rows.append(
                {
                    "label": p.source_label,
                    "brightness": p.brightness.value,
                    "sigma_brightness": p.brightness.sigma,
                    "overlap_raw": p.overlap_raw.value,
                    "sigma_overlap_raw": p.overlap_raw.sigma,
                    "overlap_corrected": p.overlap_corrected.value,
                    "sigma_overlap_corrected": p.overlap_corrected.sigma,
                    "g2": p.g2.value,
                    "sigma_g2": p.g2.sigma,
                    "kind": p.source_kind,
                }
            )
        if curve is not None:
            for mu, m, g2 in zip(curve.mean_pairs, curve.overlap, curve.g2):
                rows.append(
                    {
                        "label": "spdc-limit",
                        "brightness": mu,
                        "sigma_brightness": 0.0,
                        "overlap_raw": m,
                        "sigma_overlap_raw": 0.0,
                        "overlap_corrected": m,
                        "sigma_overlap_corrected": 0.0,
                        "g2": g2,
                        "sigma_g2": 0.0,
                        "kind": "spdc_limit",
                    }
                )
        _write_table(rows, fom.COMPARISON_COLUMNS, path, fmt)
    n_curve = 0 if curve is None else len(curve.mean_pairs)
    return f"wrote {len(points)} sources + {n_curve} curve points to {path}"


_RUNNERS = {
    "spdc-curve": _run_spdc_curve,
    "qd-brightness": _run_qd_brightness,
    "hom": _run_hom,
    "synthesize": _run_synthesize,
    "fit": _run_fit,
    "extract": _run_extract,
    "compare": _run_compare,
}


# -----------------------------------------------------------------------
# entry point
# -----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonsource",
        description=(
            "Run a single-photon-source scenario file. Modes: "
            "spdc-curve (pair-source trade-off curve), "
            "qd-brightness (count-rate calibration), "
            "hom (splitter algebra and peak areas), "
            "synthesize (forward-model a coincidence histogram), "
            "fit (peak-fit a histogram file), "
            "extract (g2/overlap report from a histogram), "
            "compare (source-comparison dataset export)."
        ),
        epilog=(
            "Exit codes: 0 success, 2 schema violation, 3 numerical failure, "
            "4 I/O failure. Identical scenario and seed give byte-identical "
            "outputs."
        ),
    )
    parser.add_argument("--scenario", required=True, help="scenario YAML file")
    parser.add_argument("--seed", type=int, default=None, help="override the scenario seed")
    parser.add_argument("--out", default=".", help="output directory (created if missing)")
    parser.add_argument(
        "--format",
        choices=("csv", "json-lines"),
        default="csv",
        help="tabular output format",
    )
    return parser


def run_scenario(scenario_path, seed_override=None, out_dir=".", fmt="csv") -> str:
    scenario_path = Path(scenario_path)
    with open(scenario_path, encoding="utf-8") as src:
        raw = yaml.safe_load(src)
    scn = _Block(raw if raw is not None else {}, "")
    mode = scn.take_str("mode")
    if mode not in _RUNNERS:
        raise DomainError(f"unknown mode {mode!r}; expected one of {sorted(_RUNNERS)}")
    seed = scn.take_int("seed", default=0)
    if seed_override is not None:
        seed = seed_override
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[mode](scn, seed, out, scenario_path.parent, fmt)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        summary = run_scenario(args.scenario, args.seed, args.out, args.format)
    except (DomainError, DimensionError, yaml.YAMLError) as exc:
        print(f"scenario error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except (ConvergenceError, DegenerateSetupError, TruncationError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return EXIT_IO
    print(summary)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
