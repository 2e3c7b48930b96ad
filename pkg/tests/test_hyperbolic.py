"""Tests for the derivative-bound experiment across scales."""

import math

import numpy as np
import pytest

from ciscurv.errors import InvalidArgumentError
from ciscurv.hyperbolic import (
    CSV_HEADER,
    LINE_TANGENCY,
    LINEAR,
    ScaleResult,
    build_scale_family,
    derivative_bound_experiment,
    graph_disk,
)
from ciscurv.oracles import LineTangencyOracle
from ciscurv.peaks import Region
from ciscurv.zero_sets import zero_set_sample


class TestBuildScaleFamily:
    def test_box_grows_with_scale(self):
        small = build_scale_family(1, degree=1)
        large = build_scale_family(4, degree=1)
        assert large.lattice.radius == pytest.approx(3.0)
        assert large.size > small.size

    def test_linear_control_has_single_peak(self):
        family = build_scale_family(1, oracle=LINEAR)
        assert int(np.count_nonzero(family.coefficient_norms())) == 1

    def test_invalid_arguments(self):
        with pytest.raises(InvalidArgumentError):
            build_scale_family(0)
        with pytest.raises(InvalidArgumentError, match="unknown family"):
            build_scale_family(1, oracle="quadric")


class TestLinearControl:
    @pytest.mark.parametrize("k", [1, 4])
    def test_disk_radius_matches_evaluation_disk(self, k):
        family = build_scale_family(k, oracle=LINEAR)
        [result] = derivative_bound_experiment([(k, family)], candidates=4, seed=1)
        assert result.normalized == pytest.approx(math.sqrt(k))
        assert result.best_derivative == pytest.approx(1.0)
        assert result.brody_derivative == pytest.approx(0.25, rel=1e-6)

    def test_graph_disk_along_the_line(self):
        family = build_scale_family(1, oracle=LINEAR)
        disk = graph_disk(family, [0, 0.3], [0, 1], 1.0, bound=1.0)
        assert disk.valid
        assert disk.disk.evaluate(1.0) == pytest.approx([0, 1.3])


def test_random_family_small_scale():
    family = build_scale_family(1, degree=1, seed=2)
    [result] = derivative_bound_experiment([(1, family)], candidates=2, seed=0)
    assert result.k == 1
    assert result.candidates <= 2
    if result.normalized is not None:
        assert 0 < result.normalized <= 1 + 1e-9
    assert list(result.to_dict())[: len(CSV_HEADER)] == CSV_HEADER


def test_empty_scales():
    assert derivative_bound_experiment([]) == []


def test_scale_result_row():
    result = ScaleResult(9, None, None, None, 0, 3, ["no zeros"])
    assert result.as_row() == [9, None, None, None, 0, 3]
    assert result.to_dict()["notes"] == ["no zeros"]


@pytest.mark.slow
class TestLineTangencyFamily:
    """Globalized no-tangency sections across scales, with a light sweep."""

    CUTOFF = 3.0

    @pytest.fixture(scope="class")
    def scales(self):
        families = [
            (k, build_scale_family(k, degree=2, seed=5, oracle=LINE_TANGENCY, budget=4,
                                   region=Region(0.5, 0.5), cutoff=self.CUTOFF))
            for k in (4, 9, 16)
        ]
        results = derivative_bound_experiment(families, candidates=2, seed=1, cutoff=self.CUTOFF)
        return families, results

    def test_normalized_derivative_stays_below_scale(self, scales):
        _, results = scales
        assert [r.k for r in results] == [4, 9, 16]
        for result in results:
            assert result.normalized is not None
            assert 0 < result.normalized < math.sqrt(result.k)
            assert result.best_derivative < 1

    def test_no_line_tangency_on_zero_set(self, scales):
        families, _ = scales
        oracle = LineTangencyOracle(2, 2)
        rng = np.random.default_rng(0)
        for _, family in families:
            seeds = (rng.random((8, 2)) - 0.5) + 1j * (rng.random((8, 2)) - 0.5)
            sample = zero_set_sample(family, seeds)
            assert sample.points
            jets = family.jets(np.array(sample.points), oracle.order, cutoff=self.CUTOFF)
            assert np.all(oracle.margins(jets.coefficients) > 0)
