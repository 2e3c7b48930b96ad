"""Tests for Brody reparametrization and line-tangency scans."""

import numpy as np
import pytest

from ciscurv.brody import (
    C1,
    C2,
    C3,
    DiskMap,
    MobiusMap,
    brody_reparametrize,
    line_tangency_order,
    max_line_tangency,
    poincare_jacobian,
)
from ciscurv.errors import DegenerateInputError, InvalidArgumentError
from ciscurv.polynomial import PolynomialMap

RESTARTS = 16


def circle():
    return PolynomialMap.from_terms(2, 1, [(0, (2, 0), 1), (0, (0, 2), 1), (0, (0, 0), -1)])


def cubic_cone():
    """z3 - z1^2 - z2^2 - z1^3."""
    return PolynomialMap.from_terms(
        3, 1, [(0, (0, 0, 1), 1), (0, (2, 0, 0), -1), (0, (0, 2, 0), -1), (0, (3, 0, 0), -1)]
    )


class TestDiskMap:
    def test_poincare_jacobian_of_identity(self):
        f = DiskMap(np.array([0, 1]))
        assert poincare_jacobian(f, 0) == pytest.approx(0.5)
        assert poincare_jacobian(f, 0.5) == pytest.approx(3 / 8)

    def test_jacobian_outside_disk(self):
        with pytest.raises(InvalidArgumentError):
            poincare_jacobian(DiskMap(np.array([0, 1])), 1.0)

    def test_mobius_invariance(self):
        f = DiskMap(np.array([[0, 0], [1, 0.5j], [0.5, -0.25]]))
        h = MobiusMap(0.3 + 0.2j, 0.4)
        for w in [0.0, 0.2 - 0.1j, -0.6j]:
            pulled = (
                np.linalg.norm(f.derivative(h(w))) * abs(h.derivative(w)) * (1 - abs(w) ** 2) / 2
            )
            assert pulled == pytest.approx(poincare_jacobian(f, h(w)))

    def test_mobius_inverse(self):
        h = MobiusMap(0.5 - 0.1j, 1.2)
        z = np.array([0.1, -0.4 + 0.3j])
        assert h.inverse()(h(z)) == pytest.approx(z)

    def test_mobius_parameter_checked(self):
        with pytest.raises(InvalidArgumentError):
            MobiusMap(1.0)

    def test_exponential_series(self):
        f = DiskMap.exponential(2.0, 20)
        assert f.evaluate(0.5)[0] == pytest.approx(np.exp(1.0))
        assert f.truncation_bound(0.5) < 1e-12

    def test_from_callable_matches_polynomial(self):
        f = DiskMap.from_callable(lambda w: 1 + 2 * w + w**3, 5)
        assert f.coefficients[:, 0] == pytest.approx([1, 2, 0, 1, 0, 0], abs=1e-12)

    def test_from_dict_accepts_polynomial_map(self):
        F = PolynomialMap.from_terms(1, 2, [(0, (1,), 1), (1, (2,), 3)])
        f = DiskMap.from_dict(F.to_dict())
        assert f.evaluate(0.5) == pytest.approx([0.5, 0.75])

    def test_dict_round_trip(self):
        f = DiskMap(np.array([[1, 0], [0.5j, 2]]), tail=1e-3)
        restored = DiskMap.from_dict(f.to_dict())
        assert restored.coefficients == pytest.approx(f.coefficients)
        assert restored.tail == f.tail

    def test_malformed_dict(self):
        with pytest.raises(InvalidArgumentError, match="malformed"):
            DiskMap.from_dict({"radius": 1.0})

    def test_polynomial_needs_one_variable(self):
        with pytest.raises(InvalidArgumentError):
            DiskMap.from_polynomial(circle())


class TestBrodyReparametrize:
    def test_exponential_certificate(self):
        f = DiskMap.exponential(5.0, 40)
        g, cert = brody_reparametrize(f)
        assert cert.holds
        assert cert.ratio_f0 <= C1 * (1 + cert.grid_tol)
        assert cert.ratio_sup <= C2 * (1 + cert.grid_tol)
        assert cert.ratio_jacobian <= C3 * (1 + cert.grid_tol)
        assert abs(cert.p0) > 0
        assert np.linalg.norm(g.derivative(0)) >= np.linalg.norm(f.derivative(0)) / 4

    def test_preimage(self):
        f = DiskMap.exponential(5.0, 40)
        g, cert = brody_reparametrize(f)
        for w in [0.0, 0.3 + 0.2j, -0.5j]:
            assert g.evaluate(w) == pytest.approx(f.evaluate(cert.preimage(w)), rel=1e-8)

    def test_linear_map_keeps_origin(self):
        g, cert = brody_reparametrize(DiskMap(np.array([0, 2])))
        assert cert.p0 == 0
        assert np.linalg.norm(g.derivative(0)) == pytest.approx(0.5)
        assert cert.to_dict()["holds"] is True

    def test_constant_map_rejected(self):
        with pytest.raises(DegenerateInputError):
            brody_reparametrize(DiskMap(np.array([3.0])))


class TestLineTangency:
    def test_circle_orders(self):
        assert line_tangency_order(circle(), [1, 0], [0, 1]) == 2
        assert line_tangency_order(circle(), [1, 0], [1, 0]) == 1

    def test_identically_zero_restriction_returns_sentinel(self):
        s = PolynomialMap.from_terms(2, 1, [(0, (0, 1), 1)])
        assert line_tangency_order(s, [0, 0], [1, 0]) == 2

    def test_direction_must_be_unit(self):
        with pytest.raises(InvalidArgumentError, match="unit"):
            line_tangency_order(circle(), [1, 0], [0, 2])

    def test_parabola_maximum(self):
        s = PolynomialMap.from_terms(2, 1, [(0, (0, 1), 1), (0, (2, 0), -1)])
        result = max_line_tangency(s, [0, 0], 2, RESTARTS)
        assert result.order_max == 2
        assert result.contact_at_least_l
        assert not result.contains_line
        assert result.margin == pytest.approx(1.0, rel=1e-6)

    def test_cone_contains_no_line_but_third_order_contact(self):
        result = max_line_tangency(cubic_cone(), [0, 0, 0], 3, RESTARTS)
        assert result.order_max == 3
        assert result.contact_at_least_l
        w = result.witness
        assert abs(w[2]) < 1e-8
        assert abs(w[0] ** 2 + w[1] ** 2) < 1e-8

    def test_linear_hypersurface_contains_line(self):
        s = PolynomialMap.from_terms(2, 1, [(0, (1, 0), 1), (0, (0, 1), 1), (0, (0, 0), -1)])
        result = max_line_tangency(s, [1, 0], 1, RESTARTS)
        assert result.contains_line
        assert result.margin == 0.0

    def test_point_off_hypersurface(self):
        result = max_line_tangency(circle(), [0, 0], 1, RESTARTS)
        assert result.order_max == 0
        assert result.margin == pytest.approx(1.0)

    def test_unitary_invariance(self):
        rng = np.random.default_rng(3)
        A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        U, _ = np.linalg.qr(A)
        moved = cubic_cone().compose_affine(U.conj().T, [0, 0, 0])
        result = max_line_tangency(moved, [0, 0, 0], 3, RESTARTS)
        assert result.order_max == 3

    def test_invalid_arguments(self):
        with pytest.raises(InvalidArgumentError):
            max_line_tangency(circle(), [0, 0, 0], 1)
        with pytest.raises(InvalidArgumentError):
            max_line_tangency(circle(), [1, 0], 0)
