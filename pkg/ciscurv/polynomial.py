"""Holomorphic polynomial maps C^n -> C^m stored as multi-index coefficient data.

Coefficients are kept as plain Python numbers so that maps with integer
coefficients stay exact under differentiation, translation and composition.
Floating evaluation goes through numpy.
"""

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Sequence, Tuple, Union

import numpy as np

from ciscurv.errors import InputParseError, InvalidArgumentError
from ciscurv.report_writer import load_json

logger = logging.getLogger(__name__)

Number = Union[int, float, complex, Fraction]
Exponent = Tuple[int, ...]
TermKey = Tuple[int, Exponent]


def _py(x: Any) -> Number:
    """Convert numpy scalars to the matching Python number."""
    if isinstance(x, np.generic):
        return x.item()
    return x


def _compositions(n: int, k: int) -> List[Exponent]:
    """All exponents of length n and total degree k, reverse-lexicographic."""
    if n == 0:
        return [()] if k == 0 else []
    if n == 1:
        return [(k,)]
    out: List[Exponent] = []
    for first in range(k, -1, -1):
        for rest in _compositions(n - 1, k - first):
            out.append((first,) + rest)
    return out


def monomial_basis(n: int, degree: int) -> List[Exponent]:
    """Monomials in n variables up to the given total degree.

    Ordered by total degree, then reverse-lexicographically, so the constant
    term comes first and the linear terms follow in variable order.
    """
    basis: List[Exponent] = []
    for k in range(degree + 1):
        basis.extend(_compositions(n, k))
    return basis


def _exact_div(value: Number, divisor: int) -> Number:
    if isinstance(value, int):
        return value // divisor if value % divisor == 0 else Fraction(value, divisor)
    if isinstance(value, Fraction):
        return value / divisor
    return value / divisor


# Scalar polynomials used during composition: exponent -> coefficient.
ScalarPoly = Dict[Exponent, Number]


def _poly_mul(p: ScalarPoly, q: ScalarPoly) -> ScalarPoly:
    out: ScalarPoly = {}
    for a, ca in p.items():
        for b, cb in q.items():
            key = tuple(x + y for x, y in zip(a, b))
            out[key] = out.get(key, 0) + ca * cb
    return {k: v for k, v in out.items() if v != 0}


def _poly_pow(p: ScalarPoly, e: int, k: int, cache: Dict[int, ScalarPoly]) -> ScalarPoly:
    if e in cache:
        return cache[e]
    if e == 0:
        result: ScalarPoly = {(0,) * k: 1}
    else:
        result = _poly_mul(_poly_pow(p, e - 1, k, cache), p)
    cache[e] = result
    return result


@dataclass(frozen=True)
class PolynomialMap:
    """A polynomial map C^n -> C^m.

    Attributes:
        n: Domain dimension.
        m: Codomain dimension.
        terms: Mapping (component j, exponent alpha) -> coefficient. Zero
            coefficients are never stored, so equality is structural.
    """

    n: int
    m: int
    terms: Mapping[TermKey, Number] = field(default_factory=dict)

    def __post_init__(self):
        errors = []
        if self.n < 0 or self.m < 0:
            errors.append(f"dimensions must be non-negative, got n={self.n}, m={self.m}")
        for (j, alpha) in self.terms:
            if not 0 <= j < self.m:
                errors.append(f"component index {j} out of range for m={self.m}")
            if len(alpha) != self.n:
                errors.append(f"exponent {alpha} has length {len(alpha)}, expected {self.n}")
            elif any(a < 0 for a in alpha):
                errors.append(f"exponent {alpha} has a negative entry")
        if errors:
            raise InvalidArgumentError("Invalid polynomial map:\n" + "\n".join(
                f"  - {e}" for e in errors
            ))
        cleaned = {k: _py(v) for k, v in self.terms.items() if _py(v) != 0}
        object.__setattr__(self, "terms", cleaned)

    @classmethod
    def from_terms(
        cls, n: int, m: int, terms: Iterable[Tuple[int, Sequence[int], Number]]
    ) -> "PolynomialMap":
        """Build a map from (j, alpha, coefficient) triples.

        Raises:
            InvalidArgumentError: On duplicate (j, alpha) pairs or bad indices.
        """
        data: Dict[TermKey, Number] = {}
        for j, alpha, coeff in terms:
            key = (int(j), tuple(int(a) for a in alpha))
            if key in data:
                raise InvalidArgumentError(f"duplicate term for component {key[0]}, alpha {key[1]}")
            data[key] = coeff
        return cls(n, m, data)

    @classmethod
    def zero(cls, n: int, m: int) -> "PolynomialMap":
        return cls(n, m, {})

    @classmethod
    def affine(cls, A: Any, b: Any) -> "PolynomialMap":
        """The map z -> A z + b, with A of shape (m, n)."""
        rows = [[_py(x) for x in row] for row in A]
        m = len(rows)
        n = len(rows[0]) if rows else 0
        data: Dict[TermKey, Number] = {}
        for j in range(m):
            if _py(b[j]) != 0:
                data[(j, (0,) * n)] = _py(b[j])
            for i in range(n):
                if rows[j][i] != 0:
                    alpha = tuple(1 if t == i else 0 for t in range(n))
                    data[(j, alpha)] = rows[j][i]
        return cls(n, m, data)

    @property
    def degree(self) -> int:
        """Total degree; -1 for the zero map."""
        if not self.terms:
            return -1
        return max(sum(alpha) for _, alpha in self.terms)

    @property
    def is_zero(self) -> bool:
        return not self.terms

    def coefficient(self, j: int, alpha: Sequence[int]) -> Number:
        return self.terms.get((j, tuple(alpha)), 0)

    def coefficient_norm(self) -> float:
        """Max modulus over coefficients in the monomial basis."""
        if not self.terms:
            return 0.0
        return float(max(abs(complex(c)) for c in self.terms.values()))

    # ---- floating evaluation -------------------------------------------------

    @cached_property
    def _packed(self) -> Tuple[np.ndarray, np.ndarray]:
        keys = sorted(self.terms)
        exps = np.array([alpha for _, alpha in keys], dtype=int).reshape(len(keys), self.n)
        selector = np.zeros((len(keys), self.m), dtype=complex)
        for t, key in enumerate(keys):
            selector[t, key[0]] = complex(self.terms[key])
        return exps, selector

    def evaluate_many(self, Z: Any) -> np.ndarray:
        """Evaluate at each row of Z (shape (K, n)); returns shape (K, m)."""
        Z = np.asarray(Z, dtype=complex).reshape(-1, self.n)
        exps, selector = self._packed
        if exps.shape[0] == 0:
            return np.zeros((Z.shape[0], self.m), dtype=complex)
        monomials = np.prod(Z[:, None, :] ** exps[None, :, :], axis=2)
        return monomials @ selector

    def evaluate(self, z: Any) -> np.ndarray:
        """Evaluate at a single point; returns shape (m,)."""
        return self.evaluate_many(np.asarray(z, dtype=complex).reshape(1, self.n))[0]

    def evaluate_exact(self, z: Sequence[Number]) -> List[Number]:
        """Evaluate with Python arithmetic; exact for integer or Fraction data."""
        out: List[Number] = [0] * self.m
        point = [_py(x) for x in z]
        for (j, alpha), c in self.terms.items():
            value = c
            for zi, a in zip(point, alpha):
                if a:
                    value = value * zi**a
            out[j] = out[j] + value
        return out

    @cached_property
    def _partials(self) -> List["PolynomialMap"]:
        return [self.diff(i) for i in range(self.n)]

    @cached_property
    def _second_partials(self) -> List[List["PolynomialMap"]]:
        return [[self._partials[a].diff(b) for b in range(self.n)] for a in range(self.n)]

    def jacobian(self, z: Any) -> np.ndarray:
        """Holomorphic Jacobian at z, shape (m, n)."""
        if self.n == 0:
            return np.zeros((self.m, 0), dtype=complex)
        cols = [d.evaluate(z) for d in self._partials]
        return np.stack(cols, axis=1)

    def hessian(self, z: Any) -> np.ndarray:
        """Holomorphic Hessian at z, shape (m, n, n)."""
        out = np.zeros((self.m, self.n, self.n), dtype=complex)
        for a in range(self.n):
            for b in range(a, self.n):
                value = self._second_partials[a][b].evaluate(z)
                out[:, a, b] = value
                out[:, b, a] = value
        return out

    # ---- exact algebra -------------------------------------------------------

    def diff(self, i: int) -> "PolynomialMap":
        """Partial derivative with respect to variable i."""
        data: Dict[TermKey, Number] = {}
        for (j, alpha), c in self.terms.items():
            if alpha[i] == 0:
                continue
            beta = alpha[:i] + (alpha[i] - 1,) + alpha[i + 1:]
            data[(j, beta)] = data.get((j, beta), 0) + c * alpha[i]
        return PolynomialMap(self.n, self.m, data)

    def directional_derivative(self, b: Sequence[Number]) -> "PolynomialMap":
        """The derivative sum_i b_i d/dz_i."""
        result = PolynomialMap.zero(self.n, self.m)
        for i, bi in enumerate(b):
            bi = _py(bi)
            if bi != 0:
                result = result + self.diff(i).scale(bi)
        return result

    def scale(self, factor: Number) -> "PolynomialMap":
        factor = _py(factor)
        return PolynomialMap(self.n, self.m, {k: c * factor for k, c in self.terms.items()})

    def __add__(self, other: "PolynomialMap") -> "PolynomialMap":
        if (self.n, self.m) != (other.n, other.m):
            raise InvalidArgumentError("cannot add polynomial maps of different shapes")
        data = dict(self.terms)
        for k, c in other.terms.items():
            data[k] = data.get(k, 0) + c
        return PolynomialMap(self.n, self.m, data)

    def __sub__(self, other: "PolynomialMap") -> "PolynomialMap":
        return self + other.scale(-1)

    def homogeneous_part(self, k: int) -> "PolynomialMap":
        return PolynomialMap(
            self.n, self.m, {key: c for key, c in self.terms.items() if sum(key[1]) == k}
        )

    def component(self, j: int) -> "PolynomialMap":
        """The scalar map given by component j."""
        return PolynomialMap(
            self.n, 1, {(0, alpha): c for (jj, alpha), c in self.terms.items() if jj == j}
        )

    def translate(self, p: Sequence[Number]) -> "PolynomialMap":
        """The map w -> F(p + w), expanded exactly."""
        point = [_py(x) for x in p]
        if len(point) != self.n:
            raise InvalidArgumentError(f"translation vector has length {len(point)}, expected {self.n}")
        data: Dict[TermKey, Number] = {}
        for (j, alpha), c in self.terms.items():
            ranges = [range(a + 1) for a in alpha]
            for beta in _product(ranges):
                value = c
                for pi, a, b in zip(point, alpha, beta):
                    if a != b:
                        value = value * math.comb(a, b) * pi ** (a - b)
                if value != 0:
                    key = (j, beta)
                    data[key] = data.get(key, 0) + value
        return PolynomialMap(self.n, self.m, data)

    def compose_affine(self, A: Any, b: Sequence[Number]) -> "PolynomialMap":
        """The map w -> F(A w + b), with A of shape (n, k).

        Entries of A and b keep their Python types, so integer data composes
        exactly.
        """
        rows = [[_py(x) for x in row] for row in A]
        offset = [_py(x) for x in b]
        if len(rows) != self.n or len(offset) != self.n:
            raise InvalidArgumentError(f"affine map must have {self.n} rows")
        k = len(rows[0]) if rows else 0
        linear: List[ScalarPoly] = []
        for i in range(self.n):
            poly: ScalarPoly = {}
            if offset[i] != 0:
                poly[(0,) * k] = offset[i]
            for t in range(k):
                if rows[i][t] != 0:
                    poly[tuple(1 if s == t else 0 for s in range(k))] = rows[i][t]
            linear.append(poly)
        caches: List[Dict[int, ScalarPoly]] = [{} for _ in range(self.n)]
        data: Dict[TermKey, Number] = {}
        for (j, alpha), c in self.terms.items():
            acc: ScalarPoly = {(0,) * k: c}
            for i, a in enumerate(alpha):
                if a:
                    acc = _poly_mul(acc, _poly_pow(linear[i], a, k, caches[i]))
            for beta, value in acc.items():
                data[(j, beta)] = data.get((j, beta), 0) + value
        return PolynomialMap(k, self.m, data)

    def restrict_to_line(
        self, z: Sequence[Number], b: Sequence[Number], method: str = "expand"
    ) -> List[List[Number]]:
        """Coefficients of t -> F(z + t b), one list per component.

        Args:
            z: Base point.
            b: Direction.
            method: "expand" for multinomial expansion, "derivatives" for
                repeated directional differentiation divided by k!.

        Returns:
            m lists of length max(degree, 0) + 1.
        """
        top = max(self.degree, 0)
        if method == "expand":
            line = self.compose_affine([[_py(x)] for x in b], z)
            return [[line.coefficient(j, (k,)) for k in range(top + 1)] for j in range(self.m)]
        if method == "derivatives":
            out: List[List[Number]] = [[] for _ in range(self.m)]
            current: PolynomialMap = self
            for k in range(top + 1):
                values = current.evaluate_exact(z)
                for j in range(self.m):
                    out[j].append(_exact_div(values[j], math.factorial(k)))
                current = current.directional_derivative(b)
            return out
        raise InvalidArgumentError(f"unknown restriction method: {method}")

    # ---- dense coefficient arrays --------------------------------------------

    def coefficient_array(self, basis: Sequence[Exponent]) -> np.ndarray:
        """Dense (m, len(basis)) complex array in the given monomial order."""
        index = {alpha: t for t, alpha in enumerate(basis)}
        out = np.zeros((self.m, len(basis)), dtype=complex)
        for (j, alpha), c in self.terms.items():
            if alpha not in index:
                raise InvalidArgumentError(f"monomial {alpha} is not in the basis")
            out[j, index[alpha]] = complex(c)
        return out

    @classmethod
    def from_coefficient_array(
        cls, n: int, basis: Sequence[Exponent], array: Any
    ) -> "PolynomialMap":
        array = np.asarray(array, dtype=complex)
        m = array.shape[0]
        data: Dict[TermKey, Number] = {}
        for j in range(m):
            for t, alpha in enumerate(basis):
                if array[j, t] != 0:
                    data[(j, tuple(alpha))] = complex(array[j, t])
        return cls(n, m, data)

    # ---- serialization -------------------------------------------------------

    def to_dict(self) -> Dict[str, Any]:
        """Convert to dictionary for JSON serialization."""
        terms = []
        for (j, alpha) in sorted(self.terms, key=lambda key: (key[0], sum(key[1]), key[1])):
            c = complex(self.terms[(j, alpha)])
            terms.append({"j": j, "alpha": list(alpha), "re": c.real, "im": c.imag})
        return {"n": self.n, "m": self.m, "terms": terms}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PolynomialMap":
        """Create from dictionary (loaded from JSON)."""
        try:
            n = int(data["n"])
            m = int(data["m"])
            triples = []
            for term in data.get("terms", []):
                triples.append(
                    (term["j"], term["alpha"], _clean_number(term.get("re", 0), term.get("im", 0)))
                )
        except (AttributeError, KeyError, TypeError, ValueError) as e:
            raise InvalidArgumentError(f"malformed polynomial map: {e!r}") from e
        return cls.from_terms(n, m, triples)


def _clean_number(re: Any, im: Any) -> Number:
    """Keep integral real coefficients as ints so JSON input stays exact."""
    if im == 0:
        if isinstance(re, int) or float(re).is_integer():
            return int(re)
        return float(re)
    return complex(float(re), float(im))


def _product(ranges: List[range]) -> Iterable[Exponent]:
    if not ranges:
        yield ()
        return
    for head in ranges[0]:
        for tail in _product(ranges[1:]):
            yield (head,) + tail


def graph_map(g: PolynomialMap, d: int) -> PolynomialMap:
    """Defining map of the graph z_{d+1..n} = g(z_1..z_d).

    Args:
        g: Map C^d -> C^k.
        d: Graph dimension (must equal g.n).

    Returns:
        F: C^{d+k} -> C^k with F_j(z) = z_{d+j} - g_j(z_1..z_d).
    """
    if g.n != d:
        raise InvalidArgumentError(f"graph function must have {d} variables, got {g.n}")
    n = d + g.m
    data: Dict[TermKey, Number] = {}
    for j in range(g.m):
        data[(j, tuple(1 if i == d + j else 0 for i in range(n)))] = 1
    for (j, alpha), c in g.terms.items():
        key = (j, tuple(alpha) + (0,) * g.m)
        data[key] = data.get(key, 0) - c
    return PolynomialMap(n, g.m, data)


def load_polynomial_map(path: Union[str, Path]) -> PolynomialMap:
    """Load a PolynomialMap from a JSON file.

    Raises:
        FileNotFoundError: If the file does not exist.
        InputParseError: If the file is not valid JSON or not a map.
    """
    path = Path(path)
    data = load_json(path)
    try:
        result = PolynomialMap.from_dict(data)
    except InvalidArgumentError as e:
        raise InputParseError(f"invalid polynomial map in {path}: {e}", path=str(path)) from e
    logger.debug(f"Loaded polynomial map n={result.n} m={result.m} from {path}")
    return result
