"""Tests for peak sections, family jets and the Gaussian sum bounds."""

import math

import numpy as np
import pytest

from ciscurv.errors import InvalidArgumentError
from ciscurv.lattice import color_classes, discretize
from ciscurv.peaks import (
    FlatModel,
    PeakFamily,
    Region,
    bisect_eta,
    empty_family,
    jet_at,
    peak_envelope_constant,
    peak_section,
    random_family,
    far_peaks_tail_bound,
    sum_of_peaks_bound,
    transversality_margin,
)
from ciscurv.polynomial import PolynomialMap


def constant_map(n, value=1):
    return PolynomialMap.from_terms(n, 1, [(0, (0,) * n, value)])


class TestFlatModel:
    def test_weight_bounds(self):
        model = FlatModel(2)
        rng = np.random.default_rng(0)
        for v in rng.standard_normal((10, 2)) + 1j * rng.standard_normal((10, 2)):
            assert model.weight_bounds_hold(v)
        assert model.weight_bounds_hold(rng.standard_normal((5, 2)))

    def test_frame_factor_has_unit_norm_at_center(self):
        model = FlatModel(1)
        c = np.array([0.7 - 0.2j])
        assert model.norm(model.frame_factor(c, c), c) == pytest.approx(1.0)


class TestPeakSection:
    @pytest.mark.parametrize("z", [[0.0], [0.5 + 0.5j], [1.2 - 0.3j]])
    def test_unit_peak_norm(self, z):
        p = np.array([0.3 + 0.1j])
        peak = peak_section(constant_map(1), p)
        expected = math.exp(-math.pi / 2 * abs(z[0] - p[0]) ** 2)
        assert peak.norm(z) == pytest.approx(expected)
        assert FlatModel(1).norm(peak.value(z), z) == pytest.approx(expected)

    def test_jet_matches_closed_form(self):
        # H(v) = h0 + h1 v; coefficient k of H(delta + v) exp(a v) in the frame at c
        h0, h1 = 0.4 - 0.2j, 0.3 + 0.5j
        p, z, c = 0.2 + 0.1j, 0.7 - 0.4j, 0.5 + 0.2j
        H = PolynomialMap.from_terms(1, 1, [(0, (0,), h0), (0, (1,), h1)])
        jet = peak_section(H, [p]).jet([z], 4, frame=[c])[0]
        delta = z - p
        a = math.pi * np.conj(p - c)
        log_k = math.pi * z * np.conj(p - c) - math.pi / 2 * abs(p) ** 2 + math.pi / 2 * abs(c) ** 2
        for k in range(5):
            expected = (h0 + h1 * delta) * a**k / math.factorial(k)
            if k:
                expected += h1 * a ** (k - 1) / math.factorial(k - 1)
            assert jet[k] == pytest.approx(np.exp(log_k) * expected)

    def test_frame_at_point_gives_norm(self):
        H = PolynomialMap.from_terms(1, 1, [(0, (0,), 2), (0, (1,), 1j)])
        peak = peak_section(H, [0.5])
        z = np.array([0.1 + 0.9j])
        assert abs(peak.jet(z, 0)[0, 0]) == pytest.approx(peak.norm(z))

    def test_center_dimension_checked(self):
        with pytest.raises(InvalidArgumentError):
            peak_section(constant_map(2), [0.0])


class TestPeakFamily:
    def test_jets_are_linear_in_coefficients(self, small_family):
        Z = np.array([[0.3 + 0.2j], [-0.7j]])
        other = random_family(small_family.lattice, small_family.classes, 1, 1, seed=8)
        combined = small_family.with_coefficients(2 * small_family.coefficients + other.coefficients)
        expected = 2 * small_family.jets(Z, 2).coefficients + other.jets(Z, 2).coefficients
        assert combined.jets(Z, 2).coefficients == pytest.approx(expected)

    def test_single_peak_family_matches_section(self, small_family):
        index = small_family.size // 2
        single = small_family.subfamily([index])
        z = np.array([0.4 - 0.3j])
        assert single.section_norm(z) == pytest.approx(single.peak(index).norm(z))

    def test_section_value_in_origin_frame(self, small_family):
        z = np.array([0.25 + 0.5j])
        direct = sum(small_family.peak(i).value(z) for i in range(small_family.size))
        assert small_family.section_value(z) == pytest.approx(direct)

    def test_cutoff_tail_bound(self, small_family):
        Z = np.array([[0.0], [0.6 + 0.6j]])
        full = small_family.jets(Z, 1, cutoff=20.0)
        cut = small_family.jets(Z, 1, cutoff=1.0)
        difference = np.max(np.abs(full.coefficients - cut.coefficients), axis=(1, 2))
        assert np.all(cut.peaks_dropped > 0)
        assert np.all(difference <= cut.tail_bound)

    def test_empty_family_has_zero_jets(self):
        lattice = discretize(1, 1.0)
        family = empty_family(lattice, color_classes(lattice, 1.0), 1, 1)
        assert jet_at(family, [0], [0.2], 2).norm() == 0.0

    def test_coefficient_shape_checked(self):
        lattice = discretize(1, 1.0)
        with pytest.raises(InvalidArgumentError, match="shape"):
            PeakFamily(lattice, color_classes(lattice, 1.0), 1, 1, np.zeros((2, 1, 2)))

    def test_dict_round_trip(self, small_family):
        small_family.epsilons = [0.2, 0.01]
        restored = PeakFamily.from_dict(small_family.to_dict())
        assert restored.coefficients == pytest.approx(small_family.coefficients)
        assert restored.epsilons == [0.2, 0.01]


class TestBounds:
    @pytest.mark.parametrize("seed", range(20))
    def test_sum_of_peaks_bound_holds(self, seed):
        lattice = discretize(1, 2.0)
        family = random_family(lattice, color_classes(lattice, 3.0), 1, 1, seed=seed)
        bound = sum_of_peaks_bound(family, l=1, region=Region(1.0, 0.5))
        assert bound.holds
        assert bound.to_dict()["grid_max"] <= bound.series_bound

    def test_sum_of_peaks_bound_needs_weight_bounds(self, small_family, mocker):
        check = mocker.patch.object(FlatModel, "weight_bounds_hold", return_value=False)
        with pytest.raises(InvalidArgumentError, match="weight"):
            sum_of_peaks_bound(small_family, l=1, region=Region(1.0, 0.5))
        check.assert_called_once()

    def test_envelope_constant_dominates_unit_peak(self):
        c = peak_envelope_constant(1, 1, 1)
        peak = peak_section(PolynomialMap.from_terms(1, 1, [(0, (1,), 1)]), [0])
        for r in [0.0, 0.5, 1.5, 3.0]:
            jet = peak.jet([r], 1)
            assert np.max(np.abs(jet)) <= c * math.exp(-(r**2) / c)

    def test_far_peaks_tail(self):
        lattice = discretize(1, 3.0)
        classes = color_classes(lattice, 3.0)
        family = random_family(lattice, classes, 1, 1, seed=2)
        q = int(np.argmin(np.abs(lattice.points[:, 0])))
        far = np.abs(lattice.points[:, 0] - lattice.points[q, 0]) > 2.0
        tail = far_peaks_tail_bound(family.subfamily(np.flatnonzero(far)), q, 2.0, l=1)
        assert tail.holds
        with pytest.raises(InvalidArgumentError):
            far_peaks_tail_bound(family, q, 2.0)


class TestTransversalityMargin:
    def test_bisect_eta(self):
        assert bisect_eta(np.array([0.5, 0.1]), np.array([0.0, 0.3])) == pytest.approx(0.3)
        assert bisect_eta(np.zeros(0), np.zeros(0)) == math.inf

    def test_zero_family_has_no_margin(self):
        lattice = discretize(1, 1.0)
        family = empty_family(lattice, color_classes(lattice, 1.0), 1, 1)
        assert transversality_margin(family, Region(0.5, 0.25)).margin == 0.0

    def test_random_family_margin_positive(self, small_family):
        result = transversality_margin(small_family, Region(1.0, 0.25))
        assert result.margin > 0
        assert not result.coarse

    def test_requires_m_at_most_n(self):
        lattice = discretize(1, 1.0)
        family = random_family(lattice, color_classes(lattice, 1.0), 1, 2, seed=0)
        with pytest.raises(InvalidArgumentError):
            transversality_margin(family)


class TestRegion:
    def test_disk_offsets(self):
        assert Region(1.0, 0.5).disk_offsets().size == 13

    def test_polydisk_offsets(self):
        assert Region(1.0, 0.5).offsets(2).shape == (169, 2)

    def test_coarse_grid_flagged(self):
        assert Region(1.0, 1.0).is_coarse

    def test_invalid_step(self):
        with pytest.raises(InvalidArgumentError):
            Region(1.0, 0.0)
