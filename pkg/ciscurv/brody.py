"""Brody reparametrization of holomorphic disks and line-tangency orders.

Disk maps are truncated power series f(z) = sum_k a_k z^k with vector
coefficients. The Poincare jacobian of f at p is ||f'(p)|| (1 - |p|^2) / 2,
the scale factor from the Poincare disk to the Euclidean target.

Reparametrization follows three steps. First maximize
j1(p) = ||f'(p/2)|| / 2 * (1 - |p|^2) / 2, the jacobian of f1(p) = f(p/2).
Then compose f1 with the disk automorphism h moving 0 to the maximizer p0.
Finally halve again: g(w) = f(h(w/2) / 2). The certificate constants follow
from j1(0) <= j1(p0) = ||g'(0)|| and the Mobius invariance of the jacobian:

    ||f'(0)|| <= 4 ||g'(0)||,   sup ||g'|| <= 4/3 ||g'(0)||,   sup j_g <= j_g(0).
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import minimize_scalar

from ciscurv.errors import DegenerateInputError, InvalidArgumentError
from ciscurv.germ import DEFAULT_ZERO_TOL
from ciscurv.polynomial import PolynomialMap
from ciscurv.report_writer import decode_array, encode_array
from ciscurv.sphere_search import minimize_on_sphere, normalize, refine_zero

logger = logging.getLogger(__name__)

C1 = 4.0
C2 = 4.0 / 3.0
C3 = 1.0
CERT_RADIUS = 0.999
CERT_RADII = 40
CERT_ANGLES = 64
UNIT_TOL = 1e-9
REFINE_PASSES = 3


@dataclass
class DiskMap:
    """Truncated power series on the unit disk.

    Attributes:
        coefficients: Shape (degree + 1, m); row k holds a_k.
        radius: Radius of the disk where the series is valid.
        tail: Bound on |a_k| for the omitted k > degree.
    """

    coefficients: np.ndarray
    radius: float = 1.0
    tail: float = 0.0

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=complex)
        if coeffs.ndim == 1:
            coeffs = coeffs[:, None]
        if coeffs.shape[0] == 0:
            raise InvalidArgumentError("a disk map needs at least one coefficient")
        self.coefficients = coeffs

    @property
    def degree(self) -> int:
        return self.coefficients.shape[0] - 1

    @property
    def m(self) -> int:
        return self.coefficients.shape[1]

    def _series(self, coeffs: np.ndarray, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        powers = z[..., None] ** np.arange(coeffs.shape[0])
        return powers @ coeffs

    def evaluate(self, z: Any) -> np.ndarray:
        """Values at z, shape z.shape + (m,)."""
        return self._series(self.coefficients, z)

    def derivative_map(self) -> "DiskMap":
        k = np.arange(1, self.degree + 1)[:, None]
        coeffs = k * self.coefficients[1:] if self.degree else np.zeros((1, self.m), dtype=complex)
        return DiskMap(coeffs, self.radius, self.tail * (self.degree + 2))

    def derivative(self, z: Any) -> np.ndarray:
        return self.derivative_map().evaluate(z)

    def is_constant(self) -> bool:
        return not np.any(self.coefficients[1:])

    def truncation_bound(self, r: float) -> float:
        """Bound on the omitted terms for |z| <= r < 1."""
        if not 0 <= r < 1:
            raise InvalidArgumentError(f"truncation bound needs 0 <= r < 1, got {r}")
        return self.tail * r ** (self.degree + 1) / (1 - r)

    def compose(
        self, inner: Callable[[np.ndarray], np.ndarray], degree: Optional[int] = None
    ) -> "DiskMap":
        """Series of f(inner(w)) for a holomorphic self-map inner of the disk."""
        return DiskMap.from_callable(lambda w: self.evaluate(inner(w)), degree or self.degree)

    @classmethod
    def exponential(cls, rate: complex, degree: int) -> "DiskMap":
        """exp(rate z) truncated at the given degree."""
        k = np.arange(degree + 1)
        log_fact = np.array([math.lgamma(i + 1) for i in k])
        if rate == 0:
            coeffs = (k == 0).astype(complex)
        else:
            coeffs = np.exp(k * np.log(complex(rate)) - log_fact)
        tail = abs(rate) ** (degree + 1) / math.factorial(degree + 1)
        return cls(coeffs[:, None], 1.0, tail)

    @classmethod
    def from_callable(cls, fn: Callable[[np.ndarray], Any], degree: int) -> "DiskMap":
        """Taylor coefficients of fn by FFT on the unit circle.

        fn must be holomorphic on a neighbourhood of the closed unit disk and
        accept an array of points.
        """
        count = 4 * (degree + 1)
        w = np.exp(2j * math.pi * np.arange(count) / count)
        values = np.asarray(fn(w), dtype=complex).reshape(count, -1)
        coeffs = np.fft.fft(values, axis=0) / count
        tail = float(np.abs(coeffs[degree + 1: count // 2]).max(initial=0.0))
        return cls(coeffs[: degree + 1], 1.0, tail)

    @classmethod
    def from_polynomial(cls, F: PolynomialMap) -> "DiskMap":
        """Exact series of a polynomial map in one variable."""
        if F.n != 1:
            raise InvalidArgumentError(f"a disk map has one variable, got n={F.n}")
        basis = [(k,) for k in range(max(F.degree, 1) + 1)]
        return cls(F.coefficient_array(basis).T)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "coefficients": encode_array(self.coefficients),
            "radius": self.radius,
            "tail": self.tail,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "DiskMap":
        """Inverse of to_dict; a PolynomialMap dict with n = 1 is also accepted."""
        if isinstance(data, dict) and "terms" in data:
            return cls.from_polynomial(PolynomialMap.from_dict(data))
        try:
            coeffs = decode_array(data["coefficients"])
            return cls(coeffs, float(data.get("radius", 1.0)), float(data.get("tail", 0.0)))
        except (KeyError, TypeError, ValueError, IndexError) as e:
            raise InvalidArgumentError(f"malformed disk map: {e!r}") from e


@dataclass(frozen=True)
class MobiusMap:
    """h(z) = e^{i theta} (z + a) / (1 + conj(a) z), |a| < 1."""

    a: complex
    theta: float = 0.0

    def __post_init__(self):
        if abs(self.a) >= 1:
            raise InvalidArgumentError(f"Mobius parameter must satisfy |a| < 1, got {abs(self.a)}")

    def __call__(self, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.exp(1j * self.theta) * (z + self.a) / (1 + np.conj(self.a) * z)

    def derivative(self, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return np.exp(1j * self.theta) * (1 - abs(self.a) ** 2) / (1 + np.conj(self.a) * z) ** 2

    def inverse(self) -> "MobiusMap":
        return MobiusMap(a=-self.a * np.exp(1j * self.theta), theta=-self.theta)


def poincare_jacobian(f: DiskMap, p: Any) -> float:
    """||f'(p)|| (1 - |p|^2) / 2.

    Raises:
        InvalidArgumentError: If |p| >= 1.
    """
    p = complex(p)
    if abs(p) >= 1:
        raise InvalidArgumentError(f"point must lie in the open unit disk, got |p| = {abs(p)}")
    return float(np.linalg.norm(f.derivative(p)) * (1 - abs(p) ** 2) / 2)


def _j1(df: DiskMap, p: np.ndarray) -> np.ndarray:
    """Jacobian of p -> f(p/2) on the Poincare disk, vectorized over p."""
    return np.linalg.norm(df.evaluate(p / 2), axis=-1) / 2 * (1 - np.abs(p) ** 2) / 2


@dataclass
class BrodyCertificate:
    """Maximizer p0, the constants, and the ratios measured on a dense grid."""

    p0: complex
    j1_max: float
    ratio_f0: float  # ||f'(0)|| / ||g'(0)||
    ratio_sup: float  # sup ||g'|| / ||g'(0)||
    ratio_jacobian: float  # sup j_g / j_g(0)
    grid_tol: float
    constants: Dict[str, float] = field(
        default_factory=lambda: {"C1": C1, "C2": C2, "C3": C3}
    )

    @property
    def mobius(self) -> MobiusMap:
        return MobiusMap(self.p0)

    @property
    def holds(self) -> bool:
        slack = 1 + self.grid_tol
        return (
            self.ratio_f0 <= C1 * slack
            and self.ratio_sup <= C2 * slack
            and self.ratio_jacobian <= C3 * slack
        )

    def preimage(self, w: Any) -> np.ndarray:
        """z in the disk with f(z) = g(w)."""
        return self.mobius(np.asarray(w, dtype=complex) / 2) / 2

    def to_dict(self) -> Dict[str, Any]:
        return {
            "p0": [self.p0.real, self.p0.imag],
            "j1_max": self.j1_max,
            "constants": dict(self.constants),
            "ratio_f0": self.ratio_f0,
            "ratio_sup": self.ratio_sup,
            "ratio_jacobian": self.ratio_jacobian,
            "grid_tol": self.grid_tol,
            "holds": self.holds,
        }


def _maximize_j1(df: DiskMap, grid_step: float) -> complex:
    k = int(math.floor(1 / grid_step))
    axis = grid_step * np.arange(-k, k + 1)
    x, y = np.meshgrid(axis, axis, indexing="ij")
    pts = (x + 1j * y).ravel()
    pts = pts[np.abs(pts) < 1]
    values = _j1(df, pts)
    # ties: largest value, then smallest |p|, then lexicographic (re, im)
    order = np.lexsort((pts.imag, pts.real, np.abs(pts), -values))
    best = complex(pts[order[0]])
    best_value = float(values[order[0]])

    for _ in range(REFINE_PASSES):
        for axis_index in (0, 1):
            fixed = best.imag if axis_index == 0 else best.real
            limit = math.sqrt(max(1 - fixed**2, 0.0))
            lo = max(-limit, (best.real if axis_index == 0 else best.imag) - grid_step)
            hi = min(limit, (best.real if axis_index == 0 else best.imag) + grid_step)
            if hi <= lo:
                continue

            def negated(t: float, axis_index: int = axis_index, fixed: float = fixed) -> float:
                p = complex(t, fixed) if axis_index == 0 else complex(fixed, t)
                if abs(p) >= 1:
                    return 0.0
                return -float(_j1(df, np.array([p]))[0])

            res = minimize_scalar(negated, bounds=(lo, hi), method="bounded",
                                  options={"xatol": 1e-12})
            if -res.fun > best_value:
                best_value = -float(res.fun)
                best = complex(res.x, fixed) if axis_index == 0 else complex(fixed, res.x)
    return best


def brody_reparametrize(
    f: DiskMap, grid_step: float = 0.01, grid_tol: float = 0.05, degree: Optional[int] = None
) -> Tuple[DiskMap, BrodyCertificate]:
    """Reparametrize f so that its derivative at 0 is nearly maximal.

    Args:
        f: Nonconstant disk map.
        grid_step: Step of the search grid for the maximizer of j1.
        grid_tol: Relative slack allowed in the certificate ratios.
        degree: Truncation degree of g (default f's degree).

    Returns:
        (g, certificate) with g(w) = f(h(w/2)/2).

    Raises:
        DegenerateInputError: If f is constant.
    """
    if f.is_constant():
        raise DegenerateInputError("cannot reparametrize a constant disk map")
    if grid_step <= 0 or grid_step >= 1:
        raise InvalidArgumentError(f"grid step must lie in (0, 1), got {grid_step}")
    df = f.derivative_map()
    p0 = _maximize_j1(df, grid_step)
    h = MobiusMap(p0)
    g = DiskMap.from_callable(lambda w: f.evaluate(h(w / 2) / 2), degree or max(f.degree, 1))

    def g_prime(w: np.ndarray) -> np.ndarray:
        # chain rule on the exact composition
        return df.evaluate(h(w / 2) / 2) * (h.derivative(w / 2) / 4)[..., None]

    radii = np.linspace(0, CERT_RADIUS, CERT_RADII)
    angles = np.linspace(0, 2 * math.pi, CERT_ANGLES, endpoint=False)
    W = (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()
    norms = np.linalg.norm(g_prime(W), axis=-1)
    g0 = float(np.linalg.norm(g_prime(np.zeros(1))[0]))
    jac = norms * (1 - np.abs(W) ** 2) / 2
    cert = BrodyCertificate(
        p0=complex(p0),
        j1_max=float(_j1(df, np.array([p0]))[0]),
        ratio_f0=float(np.linalg.norm(df.evaluate(0))) / g0,
        ratio_sup=float(norms.max()) / g0,
        ratio_jacobian=float(jac.max()) / (g0 / 2),
        grid_tol=grid_tol,
    )
    if not cert.holds:
        logger.warning(f"Brody certificate ratios exceed constants: {cert.to_dict()}")
    logger.debug(f"Brody maximizer p0={p0:.4f}, ||g'(0)||={g0:.4e}")
    return g, cert


@dataclass
class LineScanResult:
    """Largest order of contact with a line through z, over unit directions."""

    order_max: int
    witness: np.ndarray
    margin: float
    l: int
    sentinel: int

    @property
    def contact_at_least_l(self) -> bool:
        return self.order_max >= self.l

    @property
    def contains_line(self) -> bool:
        return self.order_max == self.sentinel

    def to_dict(self) -> Dict[str, Any]:
        return {
            "order_max": self.order_max,
            "witness": encode_array(self.witness),
            "margin": self.margin,
            "l": self.l,
            "contact_at_least_l": self.contact_at_least_l,
            "contains_line": self.contains_line,
        }


def _check_hypersurface(s: PolynomialMap, z: Any) -> None:
    errors = []
    if s.m != 1:
        errors.append(f"line tangency needs a single equation, got m={s.m}")
    if len(z) != s.n:
        errors.append(f"point has {len(z)} coordinates, map has n={s.n}")
    if errors:
        raise InvalidArgumentError("; ".join(errors))


def line_tangency_order(
    s: PolynomialMap, z: Any, b: Any, zero_tol: float = DEFAULT_ZERO_TOL
) -> int:
    """Vanishing order at t = 0 of t -> s(z + t b); degree + 1 if identically zero."""
    z = z.tolist() if isinstance(z, np.ndarray) else list(z)
    b = b.tolist() if isinstance(b, np.ndarray) else list(b)
    _check_hypersurface(s, z)
    norm = math.sqrt(sum(abs(x) ** 2 for x in b))
    if abs(norm - 1) > UNIT_TOL:
        raise InvalidArgumentError(f"direction must be a unit vector, got norm {norm:.6g}")
    coefficients = s.restrict_to_line(z, b)[0]
    for k, c in enumerate(coefficients):
        if abs(c) > zero_tol:
            return k
    return max(s.degree, 0) + 1


def max_line_tangency(
    s: PolynomialMap,
    z: Any,
    l: int,
    restarts: int = 64,
    seed: int = 0,
    zero_tol: float = DEFAULT_ZERO_TOL,
    workers: int = 1,
) -> LineScanResult:
    """Maximize the contact order with lines through z over unit directions.

    The restriction coefficient k along b is P_k(b), the degree-k homogeneous
    part of s(z + .). Order >= k + 1 is possible iff P_1, ..., P_k have a
    common zero on the sphere, found by a sphere search on
    sqrt(sum_j |P_j(b)|^2) with Gauss-Newton polishing.
    """
    z = np.asarray(z, dtype=complex).ravel()
    _check_hypersurface(s, z)
    if l < 1:
        raise InvalidArgumentError(f"tangency order must be >= 1, got {l}")
    top = max(s.degree, 0)
    sentinel = top + 1
    local = s.translate(z.tolist())
    parts: List[PolynomialMap] = [local.homogeneous_part(k) for k in range(top + 1)]
    c0 = abs(complex(parts[0].evaluate(np.zeros(s.n))[0]))
    witness = np.eye(s.n, dtype=complex)[0]
    if c0 > zero_tol:
        return LineScanResult(0, witness, c0, l, sentinel)

    order = 1
    for k in range(1, top + 1):

        def objective(b: np.ndarray, k: int = k) -> float:
            return float(np.sqrt(sum(abs(parts[j].evaluate(b)[0]) ** 2 for j in range(1, k + 1))))

        def polish(b: np.ndarray, k: int = k) -> np.ndarray:
            def residual(x: np.ndarray) -> np.ndarray:
                values = [parts[j].evaluate(x)[0] for j in range(1, k + 1)]
                return np.array(values + [np.vdot(x, x) - 1])

            point, _ = refine_zero(residual, b)
            return point

        best = minimize_on_sphere(objective, s.n, restarts, seed + k, refine=polish, workers=workers)
        if best.value > zero_tol:
            if k == 1:
                witness = normalize(best.point)
            break
        order = k + 1
        witness = normalize(best.point)

    margin = 0.0 if order == sentinel else abs(complex(parts[order].evaluate(witness)[0]))
    logger.debug(f"Line scan at {z}: order {order} (sentinel {sentinel}), margin {margin:.3e}")
    return LineScanResult(order, witness, margin, l, sentinel)
