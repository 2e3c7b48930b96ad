"""Shared fixtures: witness germs, random germs and small peak families."""

from typing import Callable, Sequence, Tuple

import numpy as np
import pytest

from ciscurv.germ import Germ
from ciscurv.lattice import color_classes, discretize
from ciscurv.peaks import PeakFamily, random_family
from ciscurv.polynomial import PolynomialMap, graph_map


def make_graph_germ(d: int, k: int, terms: Sequence[Tuple[int, Sequence[int], complex]]) -> Germ:
    """Germ at 0 of the graph z_{d+1..d+k} = g(z_1..z_d) for g given by terms."""
    g = PolynomialMap.from_terms(d, k, terms)
    F = graph_map(g, d)
    return Germ.create(F, [0] * (d + k))


def make_random_germ(rng: np.random.Generator, n: int, d: int, degree: int = 3) -> Germ:
    """Germ at 0 of F(z) = A z + random terms of degree 2..degree."""
    m = n - d
    terms = []
    A = rng.standard_normal((m, n)) + 1j * rng.standard_normal((m, n))
    for j in range(m):
        for i in range(n):
            terms.append((j, tuple(1 if t == i else 0 for t in range(n)), complex(A[j, i])))
    exponents = set()
    while len(exponents) < 2 * n:
        alpha = tuple(int(a) for a in rng.integers(0, degree + 1, size=n))
        if 2 <= sum(alpha) <= degree:
            exponents.add(alpha)
    for j in range(m):
        for alpha in sorted(exponents):
            c = complex(rng.standard_normal(), rng.standard_normal())
            terms.append((j, alpha, c))
    F = PolynomialMap.from_terms(n, m, terms)
    return Germ.create(F, [0] * n)


@pytest.fixture
def quadric_germ() -> Germ:
    """z3 = z1^2 + z2^2."""
    return make_graph_germ(2, 1, [(0, (2, 0), 1), (0, (0, 2), 1)])


@pytest.fixture
def cylinder_germ() -> Germ:
    """z3 = z1^2."""
    return make_graph_germ(2, 1, [(0, (2, 0), 1)])


@pytest.fixture
def parabola_germ() -> Germ:
    """Plane curve z2 = z1^2."""
    return make_graph_germ(1, 1, [(0, (2,), 1)])


@pytest.fixture
def split_germ() -> Germ:
    """z3 = z1^2, z4 = z2^2."""
    return make_graph_germ(2, 2, [(0, (2, 0), 1), (1, (0, 2), 1)])


@pytest.fixture
def veronese_germ() -> Germ:
    """z3 = z1^2, z4 = z1 z2, z5 = z2^2."""
    return make_graph_germ(2, 3, [(0, (2, 0), 1), (1, (1, 1), 1), (2, (0, 2), 1)])


@pytest.fixture
def random_germ_factory() -> Callable[..., Germ]:
    return make_random_germ


@pytest.fixture
def small_family() -> PeakFamily:
    """Seeded unit random family on a small n = 1 box."""
    lattice = discretize(1, 2.0)
    classes = color_classes(lattice, 3.0)
    return random_family(lattice, classes, 1, 1, seed=3)


@pytest.fixture
def surface_family() -> PeakFamily:
    """Seeded random hypersurface family in C^2."""
    lattice = discretize(2, 1.5)
    classes = color_classes(lattice, 1.0)
    return random_family(lattice, classes, 1, 1, seed=5)
