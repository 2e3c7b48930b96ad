"""Tests for polynomial maps."""

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ciscurv.errors import InputParseError, InvalidArgumentError
from ciscurv.polynomial import PolynomialMap, graph_map, load_polynomial_map, monomial_basis

small_ints = st.integers(min_value=-3, max_value=3)


@st.composite
def integer_maps(draw, n=2, max_degree=3):
    exponents = st.tuples(*([st.integers(0, max_degree)] * n)).filter(lambda a: sum(a) <= max_degree)
    keys = draw(st.lists(exponents, min_size=1, max_size=5, unique=True))
    return PolynomialMap.from_terms(n, 1, [(0, alpha, draw(small_ints)) for alpha in keys])


@pytest.fixture
def cubic():
    """z1^2 z2 - 3 z2 + 2."""
    return PolynomialMap.from_terms(2, 1, [(0, (2, 1), 1), (0, (0, 1), -3), (0, (0, 0), 2)])


class TestConstruction:
    def test_duplicate_terms_rejected(self):
        with pytest.raises(InvalidArgumentError, match="duplicate"):
            PolynomialMap.from_terms(2, 1, [(0, (1, 0), 1), (0, (1, 0), 2)])

    def test_bad_component_and_length_listed_together(self):
        with pytest.raises(InvalidArgumentError) as exc:
            PolynomialMap.from_terms(2, 1, [(1, (1, 0), 1), (0, (1,), 1)])
        assert "component index 1" in str(exc.value)
        assert "length 1" in str(exc.value)

    def test_zero_coefficients_dropped(self):
        F = PolynomialMap.from_terms(1, 1, [(0, (1,), 0), (0, (2,), 5)])
        assert F.terms == {(0, (2,)): 5}
        assert F.degree == 2

    def test_zero_map_degree(self):
        assert PolynomialMap.zero(3, 2).degree == -1

    def test_monomial_basis_order(self):
        assert monomial_basis(2, 2) == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        assert len(monomial_basis(3, 4)) == 35


class TestEvaluation:
    def test_evaluate_matches_exact(self, cubic):
        assert cubic.evaluate_exact([2, 1]) == [3]
        assert cubic.evaluate([2, 1])[0] == pytest.approx(3)

    def test_evaluate_many_shape(self, cubic):
        Z = np.array([[0, 0], [1, 1], [2, 1]], dtype=complex)
        values = cubic.evaluate_many(Z)
        assert values.shape == (3, 1)
        assert values[:, 0] == pytest.approx([2, 0, 3])

    def test_jacobian_and_hessian(self, cubic):
        J = cubic.jacobian([1, 2])
        assert J[0] == pytest.approx([4, -2])
        H = cubic.hessian([1, 2])
        assert H[0] == pytest.approx(np.array([[4, 2], [2, 0]]))

    def test_diff_is_exact(self, cubic):
        assert cubic.diff(0).terms == {(0, (1, 1)): 2}


class TestAlgebra:
    def test_translate(self, cubic):
        p = [1, -2]
        G = cubic.translate(p)
        w = np.array([0.3 + 0.1j, -0.2j])
        assert G.evaluate(w)[0] == pytest.approx(cubic.evaluate(np.array(p) + w)[0])

    def test_compose_affine_exact(self, cubic):
        A = [[1, 1], [0, 2]]
        G = cubic.compose_affine(A, [1, 0])
        # G(w) = (w1 + w2 + 1)^2 (2 w2) - 6 w2 + 2
        assert G.evaluate_exact([1, 1]) == [3**2 * 2 - 6 + 2]

    def test_homogeneous_part(self, cubic):
        assert cubic.homogeneous_part(1).terms == {(0, (0, 1)): -3}

    def test_graph_map(self):
        g = PolynomialMap.from_terms(1, 1, [(0, (2,), 1)])
        F = graph_map(g, 1)
        assert F.terms == {(0, (0, 1)): 1, (0, (2, 0)): -1}

    def test_graph_map_rejects_wrong_dimension(self):
        g = PolynomialMap.from_terms(2, 1, [(0, (2, 0), 1)])
        with pytest.raises(InvalidArgumentError):
            graph_map(g, 1)

    def test_restriction_of_circle(self):
        circle = PolynomialMap.from_terms(2, 1, [(0, (2, 0), 1), (0, (0, 2), 1), (0, (0, 0), -1)])
        assert circle.restrict_to_line([1, 0], [0, 1]) == [[0, 0, 1]]

    @settings(derandomize=True, max_examples=60, deadline=None)
    @given(integer_maps(), st.tuples(small_ints, small_ints), st.tuples(small_ints, small_ints))
    def test_restriction_methods_agree_exactly(self, F, z, b):
        expanded = F.restrict_to_line(list(z), list(b), method="expand")
        derived = F.restrict_to_line(list(z), list(b), method="derivatives")
        assert expanded == derived

    def test_unknown_restriction_method(self, cubic):
        with pytest.raises(InvalidArgumentError):
            cubic.restrict_to_line([0, 0], [1, 0], method="symbolic")


class TestSerialization:
    def test_dict_round_trip_keeps_integers(self, cubic):
        restored = PolynomialMap.from_dict(json.loads(json.dumps(cubic.to_dict())))
        assert restored == cubic
        assert all(isinstance(c, int) for c in restored.terms.values())

    def test_complex_coefficients(self):
        F = PolynomialMap.from_terms(1, 1, [(0, (1,), 1 + 2j)])
        assert PolynomialMap.from_dict(F.to_dict()).terms == {(0, (1,)): 1 + 2j}

    def test_coefficient_array_round_trip(self, cubic):
        basis = monomial_basis(2, 3)
        array = cubic.coefficient_array(basis)
        assert array.shape == (1, 10)
        restored = PolynomialMap.from_coefficient_array(2, basis, array)
        assert restored.evaluate([0.5, 0.25])[0] == pytest.approx(cubic.evaluate([0.5, 0.25])[0])

    def test_load_malformed_json_reports_location(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"n": 2,\n "m": 1,\n "terms": [}')
        with pytest.raises(InputParseError) as exc:
            load_polynomial_map(path)
        assert exc.value.line == 3
        assert exc.value.location["path"] == str(path)

    def test_load_missing_fields(self, tmp_path):
        path = tmp_path / "map.json"
        path.write_text('{"n": 2}')
        with pytest.raises(InputParseError):
            load_polynomial_map(path)

    def test_load_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_polynomial_map(tmp_path / "missing.json")
