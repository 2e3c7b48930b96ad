"""Tests for exterior-power Gauss maps and kernel profiles."""

from itertools import combinations
from math import comb

import numpy as np
import pytest

from ciscurv.errors import InvalidArgumentError
from ciscurv.gauss import (
    COTANGENT,
    NORMAL,
    compound,
    exterior_report,
    gauss_immersion_check,
    ii_lambda,
    kernel_profile,
    wedge_coordinates,
)
from ciscurv.germ import Germ
from ciscurv.polynomial import PolynomialMap
from tests.conftest import make_random_germ

RESTARTS = 8
SHAPES = [(5, 2), (4, 2), (3, 2), (4, 3)]


class TestCompound:
    def test_first_compound_is_identity_map(self):
        A = np.arange(6, dtype=complex).reshape(3, 2)
        assert compound(A, 1) == pytest.approx(A)

    def test_top_compound_is_determinant(self):
        rng = np.random.default_rng(0)
        A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        assert compound(A, 3)[0, 0] == pytest.approx(np.linalg.det(A))

    def test_cauchy_binet(self):
        rng = np.random.default_rng(1)
        A = rng.standard_normal((4, 3))
        B = rng.standard_normal((3, 4))
        assert compound(A @ B, 2) == pytest.approx(compound(A, 2) @ compound(B, 2))

    def test_wedge_coordinates(self):
        v = np.array([[1, 0], [0, 1], [0, 0]], dtype=complex)
        assert wedge_coordinates(v) == pytest.approx([1, 0, 0])


class TestKernelProfile:
    def test_cylinder_has_two_dimensional_kernel(self, cylinder_germ):
        profile = kernel_profile(cylinder_germ, 1, RESTARTS)
        assert profile.max_kernel_dim == 2
        assert not profile.positivity_holds
        assert not kernel_profile(cylinder_germ, 2, RESTARTS).positivity_holds

    def test_quadric_fails_only_for_first_power(self, quadric_germ):
        first = kernel_profile(quadric_germ, 1, RESTARTS)
        assert first.max_kernel_dim >= 1
        assert not first.positivity_holds
        second = kernel_profile(quadric_germ, 2, RESTARTS)
        assert second.positivity_holds
        assert second.margin == pytest.approx(2, rel=1e-6)

    def test_veronese_is_injective(self, veronese_germ):
        profile = kernel_profile(veronese_germ, 1, RESTARTS)
        assert profile.max_kernel_dim == 0
        assert profile.positivity_holds
        assert profile.to_dict()["positivity_holds"] is True

    def test_order_out_of_range(self, parabola_germ):
        with pytest.raises(InvalidArgumentError):
            kernel_profile(parabola_germ, 2)


class TestIILambda:
    def test_first_power_is_ii_matrix(self, quadric_germ):
        u = np.array([1, 0], dtype=complex)
        op = ii_lambda(quadric_germ, u, 1)
        assert op.matrix == pytest.approx(quadric_germ.sff.matrix(u))

    def test_kernel_tracks_wedge_degeneracy(self, cylinder_germ):
        op = ii_lambda(cylinder_germ, [0, 1], 2)
        assert op.kernel_dim(1e-9) == 1
        assert ii_lambda(cylinder_germ, [1, 0], 2).kernel_dim(1e-9) == 0

    def test_zero_vector_rejected(self, quadric_germ):
        with pytest.raises(InvalidArgumentError):
            ii_lambda(quadric_germ, [0, 0], 1)

    @pytest.mark.parametrize("n,d", [(4, 3), (6, 4), (5, 3)])
    def test_kernel_contains_wedges_of_ii_kernel(self, n, d):
        rng = np.random.default_rng(n * 10 + d)
        germ = make_random_germ(rng, n, d, degree=3)
        u = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        u /= np.linalg.norm(u)
        _, S, Vh = np.linalg.svd(germ.sff.matrix(u))
        rank = int(np.sum(S > 1e-10))
        K = Vh[rank:].conj().T  # (d, dim K_u)
        assert K.shape[1] == d - germ.m
        for l in range(1, K.shape[1] + 1):
            op = ii_lambda(germ, u, l)
            for subset in combinations(range(K.shape[1]), l):
                wedge = wedge_coordinates(K[:, list(subset)])
                assert np.linalg.norm(op.apply(wedge)) < 1e-9 * max(1.0, np.linalg.norm(op.matrix))
            assert op.kernel_dim(1e-9) >= comb(K.shape[1], l)

    def test_kernel_of_sum_of_squares(self):
        # z4 = z1^2 + z2^2 + z3^2: K_u is the complex-bilinear complement of u
        F = PolynomialMap.from_terms(
            4, 1, [(0, (0, 0, 0, 1), 1), (0, (2, 0, 0, 0), -1), (0, (0, 2, 0, 0), -1),
                   (0, (0, 0, 2, 0), -1)]
        )
        germ = Germ.create(F, [0, 0, 0, 0])
        u = np.array([1, 1j, 0]) / np.sqrt(2)
        K = np.array([[1, 1j, 0], [0, 0, 1]], dtype=complex).T
        assert germ.sff.matrix(u) @ K == pytest.approx(np.zeros((1, 2)))
        wedge = wedge_coordinates(K)
        assert ii_lambda(germ, u, 2).apply(wedge) == pytest.approx(np.zeros(3))


class TestGaussImmersion:
    def test_parabola_first_power_is_immersion(self, parabola_germ):
        report = gauss_immersion_check(parabola_germ, 1, restarts=RESTARTS)
        assert report.immersion
        assert report.sigma_min == pytest.approx(2, rel=1e-4)

    def test_quadric_first_power_is_not_immersion(self, quadric_germ):
        assert not gauss_immersion_check(quadric_germ, 1, restarts=RESTARTS).immersion
        assert gauss_immersion_check(quadric_germ, 2, restarts=RESTARTS).immersion

    def test_veronese_first_power_is_immersion(self, veronese_germ):
        assert gauss_immersion_check(veronese_germ, 1, restarts=RESTARTS).immersion

    def test_step_outside_range_warns(self, parabola_germ):
        report = gauss_immersion_check(parabola_germ, 1, h=1e-1, restarts=2)
        assert report.warning is not None

    def test_unknown_bundle(self, parabola_germ):
        with pytest.raises(InvalidArgumentError):
            gauss_immersion_check(parabola_germ, 1, bundle="tangent")

    def test_normal_bundle_order_bounded_by_codimension(self, quadric_germ):
        with pytest.raises(InvalidArgumentError):
            gauss_immersion_check(quadric_germ, 2, bundle=NORMAL)

    @pytest.mark.parametrize("seed", range(50))
    def test_agrees_with_kernel_profile_on_random_germs(self, seed):
        rng = np.random.default_rng(seed)
        n, d = SHAPES[seed % len(SHAPES)]
        germ = make_random_germ(rng, n, d, degree=3)
        tol = germ.rank_tol
        for l in range(1, d + 1):
            profile = kernel_profile(germ, l, 2 * RESTARTS)
            check = gauss_immersion_check(germ, l, restarts=2 * RESTARTS)
            # between tol and 10 tol neither verdict is reliable
            if profile.margin <= tol or profile.margin > 10 * tol:
                assert check.immersion == profile.positivity_holds, (n, d, l)


def test_exterior_report_verdicts(cylinder_germ, veronese_germ):
    report = exterior_report(cylinder_germ, 1, restarts=RESTARTS)
    assert report["verdict"] is False
    assert report["kernel_profile"]["max_kernel_dim"] == 2
    assert exterior_report(veronese_germ, 2, COTANGENT, restarts=RESTARTS)["verdict"] is True
    normal = exterior_report(veronese_germ, 1, NORMAL, restarts=RESTARTS)
    assert "kernel_profile" not in normal
