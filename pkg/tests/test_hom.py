import numpy as np
import pytest

from photonsource import hom
from photonsource.errors import DegenerateSetupError, DomainError
from photonsource.fock import InterferometerMatrix


@pytest.fixture
def measured_splitter():
    # intensity transmissions of the free-space splitter used for the
    # non-resonant interference measurements
    return hom.matrix_from_transmissions(0.3310, 0.6690, 0.6632, 0.3368)


@pytest.fixture
def balanced():
    return hom.matrix_from_transmissions(0.5, 0.5, 0.5, 0.5)


def test_coincidence_probability_balanced_limits(balanced):
    assert hom.coincidence_probability(balanced, 1.0) == pytest.approx(0.0, abs=1e-12)
    assert hom.coincidence_probability(balanced, 0.0) == pytest.approx(0.5)


def test_coincidence_probability_measured_matrix(measured_splitter):
    # (D + P)/2 for fully distinguishable photons
    assert hom.coincidence_probability(measured_splitter, 0.0) == pytest.approx(0.5552, abs=2e-4)
    # pure bosonic term for perfect overlap
    assert hom.coincidence_probability(measured_splitter, 1.0) == pytest.approx(0.1104, abs=2e-4)


def test_coincidence_probability_linear_in_overlap(measured_splitter):
    lo = hom.coincidence_probability(measured_splitter, 0.0)
    hi = hom.coincidence_probability(measured_splitter, 1.0)
    mid = hom.coincidence_probability(measured_splitter, 0.37)
    assert mid == pytest.approx(lo + 0.37 * (hi - lo), rel=1e-12)


def test_max_visibility_anchor(measured_splitter):
    assert hom.max_visibility(measured_splitter) == pytest.approx(0.8012, abs=2e-4)


def test_visibility_to_overlap_anchor(measured_splitter):
    res = hom.visibility_to_overlap(0.7848, measured_splitter)
    assert res.mean_wavepacket_overlap == pytest.approx(0.9795, abs=5e-4)
    assert res.raw_visibility == 0.7848


def test_visibility_to_overlap_propagates_sigma(measured_splitter):
    res = hom.visibility_to_overlap(0.7848, measured_splitter, sigma_visibility=0.01)
    scale = res.mean_wavepacket_overlap / res.raw_visibility
    assert res.sigma_overlap == pytest.approx(0.01 * scale)


def test_visibility_to_overlap_degenerate():
    with pytest.raises(DegenerateSetupError):
        hom.visibility_to_overlap(0.5, InterferometerMatrix(np.eye(2)))


def test_matrix_from_transmissions_entries():
    m = hom.matrix_from_transmissions(0.3310, 0.6690, 0.6632, 0.3368).matrix
    assert m[0, 0] == pytest.approx(np.sqrt(0.3310))
    assert m[1, 1] == pytest.approx(-np.sqrt(0.3368))
    with pytest.raises(DomainError):
        hom.matrix_from_transmissions(1.2, 0.5, 0.5, 0.5)


def test_setup_from_splitting_ratios():
    setup = hom.HomSetup.from_splitting(0.45, 0.50, classical_visibility=0.95, warn_threshold=0.2)
    assert setup.reflectance == pytest.approx(0.45)
    assert setup.transmittance == pytest.approx(0.50)


def test_setup_validation(balanced):
    with pytest.raises(DomainError):
        hom.HomSetup(balanced, classical_visibility=1.2)
    with pytest.raises(DomainError):
        hom.HomSetup(balanced, pulse_pair_delay=7.0, rep_period=12.2)


# -----------------------------------------------------------------------
# peak-area algebra
# -----------------------------------------------------------------------


def test_perfect_source_suppresses_center_peak():
    setup = hom.HomSetup.from_splitting(0.5, 0.5)
    areas = hom.expected_peak_areas(setup, overlap=1.0, g2=0.0)
    assert areas.a_0 == pytest.approx(0.0, abs=1e-15)
    assert areas.a_minus == pytest.approx(0.125)
    assert areas.a_plus == areas.a_minus


def test_cross_polarized_center_peak_remains():
    setup = hom.HomSetup.from_splitting(0.508, 0.492, classical_visibility=1 - 0.0012)
    areas = hom.expected_peak_areas(setup, overlap=0.057, g2=0.0028)
    # nearly distinguishable photons coincide at close to half the
    # classical side-peak level
    assert areas.a_0 / (areas.a_minus + areas.a_plus) == pytest.approx(0.5, abs=0.05)
    assert areas.a_0 > 0.2 * areas.a_minus


def test_areas_are_nonnegative_over_grid():
    for r, t in [(0.5, 0.5), (0.45, 0.50), (0.508, 0.492), (0.3, 0.7)]:
        setup = hom.HomSetup.from_splitting(r, t, classical_visibility=0.97, warn_threshold=0.2)
        for overlap in (0.0, 0.5, 1.0):
            for g2 in (0.0, 0.05, 0.5):
                areas = hom.expected_peak_areas(setup, overlap, g2)
                for value in (areas.a_0, areas.a_minus, areas.a_plus, areas.a_outer, areas.a_far):
                    assert value >= 0.0


@pytest.mark.parametrize("r,t,cv", [(0.5, 0.5, 1.0), (0.45, 0.50, 0.95), (0.508, 0.492, 0.9988)])
def test_area_ratio_round_trip_is_identity(r, t, cv):
    for overlap in np.linspace(0.0, 1.0, 7):
        for g2 in (0.0, 0.0028, 0.024, 0.047, 0.25):
            ratio = hom.area_ratio_from_overlap(r, t, cv, overlap, g2)
            back = hom.overlap_from_area_ratio(ratio, r, t, cv, g2)
            assert abs(back - overlap) < 1e-12


def test_round_trip_through_peak_areas():
    setup = hom.HomSetup.from_splitting(0.508, 0.492, classical_visibility=1 - 0.0012)
    areas = hom.expected_peak_areas(setup, overlap=0.9956, g2=0.0028)
    ratio = areas.a_0 / (areas.a_minus + areas.a_plus)
    back = hom.overlap_from_area_ratio(
        ratio, setup.reflectance, setup.transmittance, setup.classical_visibility, 0.0028
    )
    assert abs(back - 0.9956) < 1e-12


def test_multiphoton_correction_raises_overlap():
    # with the nonresonant splitter and a visibly suppressed center peak,
    # accounting for g2 > 0 must increase the recovered overlap
    r, t, cv = 0.45, 0.50, 0.95
    ratio = hom.area_ratio_from_overlap(r, t, cv, 0.74, 0.024)
    raw = hom.overlap_from_area_ratio(ratio, r, t, cv, 0.0)
    corrected = hom.overlap_from_area_ratio(ratio, r, t, cv, 0.024)
    assert corrected > raw


def test_overlap_from_area_ratio_degenerate():
    with pytest.raises(DegenerateSetupError):
        hom.overlap_from_area_ratio(0.3, 0.5, 0.5, 0.0, 0.0)
    with pytest.raises(DomainError):
        hom.area_ratio_from_overlap(0.0, 0.5, 1.0, 0.5, 0.0)
