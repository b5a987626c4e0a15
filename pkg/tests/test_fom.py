import csv
import math

import pytest

from photonsource import fom
from photonsource.errors import DomainError
from photonsource.fom import (
    FigureOfMerit,
    SpdcLimitCurve,
    default_limit_curve,
    export_comparison,
    polarized_brightness,
    read_comparison,
    reference_sources,
    spdc_limit_curve,
)
from photonsource.spdc import default_profile
from photonsource.tcspc import Measured


def _same(a: float, b: float) -> bool:
    return a == b or (math.isnan(a) and math.isnan(b))


def _measured_same(a: Measured, b: Measured) -> bool:
    return _same(a.value, b.value) and _same(a.sigma, b.sigma)


def make_point(**overrides) -> FigureOfMerit:
    kwargs = dict(
        source_label="test source",
        brightness=Measured(0.3, 0.02),
        overlap_raw=Measured(0.7, 0.05),
        overlap_corrected=Measured(0.75, 0.05),
        g2=Measured(0.03, 0.01),
        source_kind="qd_nonresonant",
    )
    kwargs.update(overrides)
    return FigureOfMerit(**kwargs)


class TestBrightnessConvention:
    def test_unpolarized_emission_counts_half(self):
        assert polarized_brightness(0.65, polarized=False) == pytest.approx(0.325)

    def test_polarized_emission_unchanged(self):
        assert polarized_brightness(0.16, polarized=True) == 0.16

    @pytest.mark.parametrize("polarized", [True, False])
    def test_zero_stays_zero(self, polarized):
        assert polarized_brightness(0.0, polarized) == 0.0

    @pytest.mark.parametrize("raw", [-0.1, 1.2, math.inf])
    def test_raw_outside_unit_interval_rejected(self, raw):
        with pytest.raises(DomainError):
            polarized_brightness(raw, polarized=True)


class TestFigureOfMeritValidation:
    def test_valid_point_constructs(self):
        make_point()

    def test_brightness_above_one_beyond_sigma_rejected(self):
        with pytest.raises(DomainError, match="brightness"):
            make_point(brightness=Measured(1.1, 0.05))

    def test_brightness_above_one_within_sigma_allowed(self):
        make_point(brightness=Measured(1.02, 0.05))

    def test_negative_g2_beyond_sigma_rejected(self):
        with pytest.raises(DomainError, match="g2"):
            make_point(g2=Measured(-0.02, 0.01))

    def test_negative_g2_within_sigma_allowed(self):
        make_point(g2=Measured(-0.005, 0.01))

    def test_overlap_above_one_beyond_sigma_rejected(self):
        with pytest.raises(DomainError, match="overlap_corrected"):
            make_point(overlap_corrected=Measured(1.2, 0.01))

    def test_unreported_value_passes_as_nan(self):
        make_point(g2=Measured(float("nan")))

    def test_unknown_kind_rejected(self):
        with pytest.raises(DomainError, match="source_kind"):
            make_point(source_kind="laser")

    def test_empty_label_rejected(self):
        with pytest.raises(DomainError, match="label"):
            make_point(source_label="")


class TestReferenceSources:
    def test_every_row_constructs_and_labels_unique(self):
        rows = reference_sources()
        labels = [r.source_label for r in rows]
        assert len(set(labels)) == len(labels)

    def test_second_nonresonant_device_row(self):
        row = next(r for r in reference_sources() if r.source_label == "QD2")
        assert row.brightness.value == pytest.approx(0.175)
        assert row.overlap_raw.value == pytest.approx(0.68)
        assert row.overlap_raw.sigma == pytest.approx(0.081)
        assert row.g2.value == pytest.approx(0.047)
        assert row.g2.sigma == pytest.approx(0.009)
        assert row.source_kind == "qd_nonresonant"

    def test_brightest_resonant_device_row(self):
        row = next(r for r in reference_sources() if r.source_label == "QD3")
        assert row.brightness.value == pytest.approx(0.16)
        assert row.brightness.sigma == pytest.approx(0.02)
        assert row.overlap_raw.value == pytest.approx(0.989)
        assert row.overlap_corrected.value == pytest.approx(0.9956)
        assert row.g2.value == pytest.approx(0.0028)
        assert row.source_kind == "qd_resonant"

    def test_alternate_corrected_overlap_for_brightest_device(self):
        assert fom.QD3_OVERLAP_CORRECTED_ALT.value == pytest.approx(0.9945)
        assert fom.QD3_OVERLAP_CORRECTED_ALT.sigma == pytest.approx(0.0045)

    def test_pair_source_point(self):
        row = next(r for r in reference_sources() if r.source_kind == "spdc")
        assert row.brightness.value == pytest.approx(0.015)
        assert row.overlap_raw.value == pytest.approx(0.9795)
        assert row.overlap_raw.sigma == pytest.approx(0.0005)

    def test_figure_derived_rows_are_marked(self):
        rows = [r for r in reference_sources() if math.isnan(r.overlap_corrected.value)]
        assert len(rows) == 3
        for r in rows:
            assert "figure-derived" in r.source_label

    def test_unpolarized_rows_sit_below_raw_values(self):
        # brightest nonresonant row derives from a 0.65 raw brightness
        row = next(r for r in reference_sources() if r.source_label == "QD1")
        assert row.brightness.value == pytest.approx(0.65 / 2)


class TestLimitCurve:
    @pytest.mark.parametrize("bad", [0.0, -0.01, 0.11])
    def test_grid_outside_range_rejected(self, bad):
        with pytest.raises(DomainError):
            spdc_limit_curve(default_profile(), [0.05, bad])

    def test_empty_grid_rejected(self):
        with pytest.raises(DomainError):
            spdc_limit_curve(default_profile(), [])

    def test_column_length_mismatch_rejected(self):
        with pytest.raises(DomainError):
            SpdcLimitCurve((0.01, 0.02), (0.9,), (0.1, 0.2))

    def test_overlap_falls_and_g2_rises_with_brightness(self):
        curve = spdc_limit_curve(default_profile(), [0.005, 0.01, 0.02, 0.04, 0.08])
        for lo, hi in zip(curve.overlap[1:], curve.overlap[:-1]):
            assert lo < hi
        for lo, hi in zip(curve.g2[:-1], curve.g2[1:]):
            assert lo < hi

    def test_low_brightness_endpoint_is_nearly_ideal(self):
        curve = spdc_limit_curve(default_profile(), [0.001])
        assert curve.overlap[0] > 0.99
        assert curve.g2[0] < 0.005

    def test_calibration_point_recovered(self):
        # the default profile is fitted to put g2 near 0.25 at 0.07 pairs/pulse
        curve = spdc_limit_curve(default_profile(), [0.07])
        assert curve.g2[0] == pytest.approx(0.25, abs=0.03)

    def test_default_curve_shape(self):
        curve = default_limit_curve(12)
        assert len(curve.mean_pairs) == 12
        assert curve.mean_pairs[0] == pytest.approx(0.001)
        assert curve.mean_pairs[-1] == 0.1
        assert all(a < b for a, b in zip(curve.mean_pairs, curve.mean_pairs[1:]))


class TestComparisonExport:
    def test_round_trip_is_lossless(self, tmp_path):
        points = reference_sources()
        curve = spdc_limit_curve(default_profile(), [0.004, 0.02, 0.1])
        path = tmp_path / "comparison.csv"
        export_comparison(points, curve, path)
        back_points, back_curve = read_comparison(path)
        assert len(back_points) == len(points)
        for a, b in zip(points, back_points):
            assert a.source_label == b.source_label
            assert a.source_kind == b.source_kind
            assert _measured_same(a.brightness, b.brightness)
            assert _measured_same(a.overlap_raw, b.overlap_raw)
            assert _measured_same(a.overlap_corrected, b.overlap_corrected)
            assert _measured_same(a.g2, b.g2)
        assert back_curve is not None
        assert back_curve.mean_pairs == curve.mean_pairs
        assert back_curve.overlap == curve.overlap
        assert back_curve.g2 == curve.g2

    def test_file_is_utf8_with_lf_endings(self, tmp_path):
        path = tmp_path / "comparison.csv"
        export_comparison(reference_sources(), None, path)
        blob = path.read_bytes()
        blob.decode("utf-8")
        assert b"\r" not in blob
        assert blob.endswith(b"\n")

    def test_header_and_row_count(self, tmp_path):
        points = reference_sources()
        curve = spdc_limit_curve(default_profile(), [0.01, 0.05])
        path = tmp_path / "comparison.csv"
        export_comparison(points, curve, path)
        with open(path, encoding="utf-8", newline="") as src:
            rows = list(csv.reader(src))
        assert rows[0] == list(fom.COMPARISON_COLUMNS)
        assert len(rows) == 1 + len(points) + 2
        assert rows[-1][-1] == "spdc_limit"

    def test_export_without_curve_reads_back_none(self, tmp_path):
        path = tmp_path / "comparison.csv"
        export_comparison([make_point()], None, path)
        points, curve = read_comparison(path)
        assert len(points) == 1
        assert curve is None

    def test_empty_point_list_rejected(self, tmp_path):
        with pytest.raises(DomainError):
            export_comparison([], None, tmp_path / "comparison.csv")

    def test_foreign_header_rejected(self, tmp_path):
        path = tmp_path / "other.csv"
        path.write_text("a,b,c\n1,2,3\n", encoding="utf-8")
        with pytest.raises(DomainError, match="header"):
            read_comparison(path)

    def test_malformed_row_rejected(self, tmp_path):
        path = tmp_path / "comparison.csv"
        export_comparison([make_point()], None, path)
        with open(path, "a", encoding="utf-8", newline="") as out:
            out.write("stub,0.1\n")
        with pytest.raises(DomainError, match="row"):
            read_comparison(path)
