"""Peak sections of the flat Bargmann-Fock model and jets of their sums.

A section of the flat model is a holomorphic map f: C^n -> C^m with pointwise
norm ||f(z)|| exp(-pi/2 ||z||^2). The peak section with jet H at p is

    sigma(H, p)(z) = H(z - p) exp(pi <z, p> - pi/2 ||p||^2),

where <z, p> = sum z_i conj(p_i). Jets are taken in the unitary frame
sigma(1, c) centered at a frame point c; with c = z the constant term has
modulus equal to the section norm at z.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from itertools import product
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from ciscurv.errors import InvalidArgumentError
from ciscurv.lattice import ColorClasses, Lattice, to_real
from ciscurv.polynomial import Exponent, PolynomialMap, monomial_basis
from ciscurv.report_writer import decode_array, encode_array

logger = logging.getLogger(__name__)

DEFAULT_CUTOFF = 8.0
TAIL_TOL = math.exp(-math.pi / 4 * 64)
PAIR_CHUNK = 20000
ENVELOPE_RADII = np.linspace(0.0, 12.0, 1201)
COARSE_GRID = 0.5


def hermitian_pairing(z: np.ndarray, p: np.ndarray) -> np.ndarray:
    """<z, p> = sum_i z_i conj(p_i) over the last axis; holomorphic in z."""
    return np.sum(np.asarray(z) * np.conj(np.asarray(p)), axis=-1)


@dataclass(frozen=True)
class FlatModel:
    """Trivial line bundle on C^n with weight pi/2 ||z||^2."""

    n: int

    def weight(self, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return math.pi / 2 * np.sum(np.abs(z) ** 2, axis=-1)

    def norm(self, value: Any, z: Any) -> np.ndarray:
        """Pointwise norm of a section with holomorphic value(s) at z."""
        value = np.atleast_1d(np.asarray(value, dtype=complex))
        return np.linalg.norm(value, axis=-1) * np.exp(-self.weight(z))

    def frame_factor(self, c: Any, z: Any) -> np.ndarray:
        """sigma(1, c)(z), the unitary frame centered at c."""
        c = np.asarray(c, dtype=complex)
        return np.exp(math.pi * hermitian_pairing(z, c) - math.pi / 2 * np.sum(np.abs(c) ** 2, axis=-1))

    def weight_bounds_hold(self, v: Any) -> bool:
        """pi/4 ||v||^2 <= h(v) <= 3 pi/4 ||v||^2 for every row of v."""
        v = np.atleast_2d(np.asarray(v, dtype=complex))
        sq = np.sum(np.abs(v) ** 2, axis=-1)
        h = self.weight(v)
        slack = 1e-12 * sq
        return bool(np.all((math.pi / 4 * sq <= h + slack) & (h <= 3 * math.pi / 4 * sq + slack)))


@dataclass(frozen=True)
class TransferTable:
    """Index data for the coefficient map H(delta + v) exp(a . v) -> jet in v."""

    n: int
    degree: int
    order: int
    in_index: np.ndarray
    out_index: np.ndarray
    coef: np.ndarray
    exp_delta: np.ndarray
    exp_a: np.ndarray
    scatter: np.ndarray

    @property
    def size_in(self) -> int:
        return math.comb(self.n + self.degree, self.n)

    @property
    def size_out(self) -> int:
        return math.comb(self.n + self.order, self.n)

    def evaluate(self, delta: np.ndarray, a: np.ndarray) -> np.ndarray:
        """Transfer matrices for a batch, shape (B, size_in, size_out)."""
        pd = np.prod(delta[:, None, :] ** self.exp_delta[None, :, :], axis=2)
        pa = np.prod(a[:, None, :] ** self.exp_a[None, :, :], axis=2)
        values = (self.coef[None, :] * pd * pa) @ self.scatter
        return values.reshape(-1, self.size_in, self.size_out)


@lru_cache(maxsize=None)
def transfer_table(n: int, degree: int, order: int) -> TransferTable:
    basis_in = monomial_basis(n, degree)
    basis_out = monomial_basis(n, order)
    rows: List[Tuple[int, int, float, Exponent, Exponent]] = []
    for i, alpha in enumerate(basis_in):
        for o, gamma in enumerate(basis_out):
            ranges = [range(min(a, g) + 1) for a, g in zip(alpha, gamma)]
            for beta in product(*ranges):
                coef = 1.0
                for a, g, b in zip(alpha, gamma, beta):
                    coef *= math.comb(a, b) / math.factorial(g - b)
                rows.append((
                    i, o, coef,
                    tuple(a - b for a, b in zip(alpha, beta)),
                    tuple(g - b for g, b in zip(gamma, beta)),
                ))
    size_out = len(basis_out)
    scatter = np.zeros((len(rows), len(basis_in) * size_out))
    for t, (i, o, _, _, _) in enumerate(rows):
        scatter[t, i * size_out + o] = 1.0
    return TransferTable(
        n=n,
        degree=degree,
        order=order,
        in_index=np.array([r[0] for r in rows], dtype=int),
        out_index=np.array([r[1] for r in rows], dtype=int),
        coef=np.array([r[2] for r in rows]),
        exp_delta=np.array([r[3] for r in rows], dtype=int).reshape(len(rows), n),
        exp_a=np.array([r[4] for r in rows], dtype=int).reshape(len(rows), n),
        scatter=scatter,
    )


def peak_jets(
    centers: np.ndarray,
    coefficients: np.ndarray,
    Z: np.ndarray,
    frames: np.ndarray,
    degree: int,
    order: int,
) -> np.ndarray:
    """Jets of single peaks, one per row.

    Args:
        centers: Peak centers, shape (B, n).
        coefficients: Dense H coefficients, shape (B, m, size_in).
        Z: Evaluation points, shape (B, n).
        frames: Frame centers, shape (B, n).
        degree: Degree of the H polynomials.
        order: Jet order.

    Returns:
        Jet coefficients in monomial_basis(n, order), shape (B, m, size_out).
    """
    n = centers.shape[1]
    table = transfer_table(n, degree, order)
    delta = Z - centers
    a = math.pi * np.conj(centers - frames)
    log_k = (
        math.pi * hermitian_pairing(Z, centers - frames)
        - math.pi / 2 * np.sum(np.abs(centers) ** 2, axis=-1)
        + math.pi / 2 * np.sum(np.abs(frames) ** 2, axis=-1)
    )
    T = table.evaluate(delta, a)
    return np.exp(log_k)[:, None, None] * np.einsum("bmi,bio->bmo", coefficients, T)


def unit_jet_bound(r: float, n: int, degree: int, order: int) -> float:
    """Bound on the jet norm, in the frame at z, of a peak with ||H|| <= 1 at distance r."""
    size_in = math.comb(n + degree, n)
    return size_in * (1 + r) ** degree * (1 + math.pi * r) ** order * math.exp(-math.pi / 2 * r**2)


@dataclass
class PeakSection:
    """The peak section sigma(H, p)."""

    H: PolynomialMap
    p: np.ndarray

    @property
    def n(self) -> int:
        return self.H.n

    @property
    def degree(self) -> int:
        return max(self.H.degree, 0)

    def value(self, z: Any) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        factor = np.exp(math.pi * hermitian_pairing(z, self.p) - math.pi / 2 * np.sum(np.abs(self.p) ** 2))
        return self.H.evaluate(z - self.p) * factor

    def norm(self, z: Any) -> float:
        """Pointwise norm ||H(z - p)|| exp(-pi/2 ||z - p||^2), computed in log form."""
        z = np.asarray(z, dtype=complex)
        log_scale = (
            math.pi * np.real(hermitian_pairing(z, self.p))
            - math.pi / 2 * np.sum(np.abs(self.p) ** 2)
            - math.pi / 2 * np.sum(np.abs(z) ** 2)
        )
        return float(np.linalg.norm(self.H.evaluate(z - self.p)) * np.exp(log_scale))

    def jet(self, z: Any, order: int, frame: Optional[Any] = None) -> np.ndarray:
        """Jet at z in the frame centered at frame (default z), shape (m, size_out)."""
        z = np.asarray(z, dtype=complex).reshape(1, self.n)
        c = z if frame is None else np.asarray(frame, dtype=complex).reshape(1, self.n)
        coeffs = self.H.coefficient_array(monomial_basis(self.n, self.degree))[None]
        return peak_jets(self.p.reshape(1, self.n), coeffs, z, c, self.degree, order)[0]


def peak_section(H: PolynomialMap, p: Any) -> PeakSection:
    point = np.asarray(p, dtype=complex).ravel()
    if point.size != H.n:
        raise InvalidArgumentError(f"center has {point.size} coordinates, H has n={H.n}")
    return PeakSection(H=H, p=point)


@dataclass
class JetEvaluation:
    """Jet of a sum of peaks at one point."""

    coefficients: np.ndarray  # (m, size_out)
    basis: List[Exponent]
    tail_bound: float
    peaks_used: int
    peaks_dropped: int

    def norm(self) -> float:
        return float(np.max(np.abs(self.coefficients), initial=0.0))

    def to_polynomial_map(self) -> PolynomialMap:
        n = len(self.basis[0])
        return PolynomialMap.from_coefficient_array(n, self.basis, self.coefficients)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "coefficients": encode_array(self.coefficients),
            "basis": [list(b) for b in self.basis],
            "tail_bound": self.tail_bound,
            "peaks_used": self.peaks_used,
            "peaks_dropped": self.peaks_dropped,
        }


@dataclass
class JetBatch:
    """Jets of a family at many points."""

    coefficients: np.ndarray  # (G, m, size_out)
    tail_bound: np.ndarray  # (G,)
    peaks_used: np.ndarray  # (G,)
    peaks_dropped: np.ndarray  # (G,)
    basis: List[Exponent]

    def jet(self, i: int) -> JetEvaluation:
        return JetEvaluation(
            coefficients=self.coefficients[i],
            basis=self.basis,
            tail_bound=float(self.tail_bound[i]),
            peaks_used=int(self.peaks_used[i]),
            peaks_dropped=int(self.peaks_dropped[i]),
        )

    def norms(self) -> np.ndarray:
        return np.max(np.abs(self.coefficients), axis=(1, 2))


@dataclass
class PeakFamily:
    """s = sum_p sigma(H_p, p) over a lattice, with dense H coefficients.

    Attributes:
        lattice: Peak centers.
        classes: Color classes of the lattice.
        degree: Degree of every H_p.
        m: Number of components.
        coefficients: Shape (N, m, size) in monomial_basis(n, degree) order.
        epsilons: Perturbation size per color class (empty if not globalized).
    """

    lattice: Lattice
    classes: ColorClasses
    degree: int
    m: int
    coefficients: np.ndarray
    epsilons: List[float] = field(default_factory=list)

    def __post_init__(self):
        expected = (self.lattice.size, self.m, math.comb(self.n + self.degree, self.n))
        if self.coefficients is None:
            self.coefficients = np.zeros(expected, dtype=complex)
        self.coefficients = np.asarray(self.coefficients, dtype=complex)
        if self.coefficients.shape != expected:
            raise InvalidArgumentError(
                f"coefficient array has shape {self.coefficients.shape}, expected {expected}"
            )

    @property
    def n(self) -> int:
        return self.lattice.n

    @property
    def basis(self) -> List[Exponent]:
        return monomial_basis(self.n, self.degree)

    @property
    def size(self) -> int:
        return self.lattice.size

    def coefficient_norms(self) -> np.ndarray:
        """Max-modulus norm of each H_p."""
        if self.size == 0:
            return np.zeros(0)
        return np.max(np.abs(self.coefficients), axis=(1, 2))

    def with_coefficients(self, coefficients: np.ndarray) -> "PeakFamily":
        return PeakFamily(self.lattice, self.classes, self.degree, self.m,
                          np.array(coefficients, dtype=complex), list(self.epsilons))

    def subfamily(self, indices: Sequence[int]) -> "PeakFamily":
        """Same lattice with every H_p outside indices set to zero."""
        mask = np.zeros(self.size, dtype=bool)
        mask[list(indices)] = True
        coeffs = np.where(mask[:, None, None], self.coefficients, 0)
        return self.with_coefficients(coeffs)

    def peak(self, index: int) -> PeakSection:
        H = PolynomialMap.from_coefficient_array(self.n, self.basis, self.coefficients[index])
        return PeakSection(H=H, p=self.lattice.points[index])

    def jets(
        self,
        Z: Any,
        order: int,
        frame: Optional[Any] = None,
        cutoff: float = DEFAULT_CUTOFF,
    ) -> JetBatch:
        """Jets of s at each row of Z.

        Args:
            Z: Evaluation points, shape (G, n).
            order: Jet order.
            frame: Fixed frame center for every point; None uses z itself.
            cutoff: Peaks farther than this from z are dropped and bounded.
        """
        Z = np.asarray(Z, dtype=complex).reshape(-1, self.n)
        G = Z.shape[0]
        basis_out = monomial_basis(self.n, order)
        out = np.zeros((G, self.m, len(basis_out)), dtype=complex)
        norms = self.coefficient_norms()
        active = np.flatnonzero(norms > 0)
        used = np.zeros(G, dtype=int)
        if active.size == 0 or G == 0:
            return JetBatch(out, np.zeros(G), used, np.zeros(G, dtype=int), basis_out)

        centers = self.lattice.points[active]
        tree = cKDTree(to_real(centers))
        neighbours = tree.query_ball_point(to_real(Z), r=cutoff)
        g_idx = np.concatenate([np.full(len(nb), g, dtype=int) for g, nb in enumerate(neighbours)])
        p_idx = np.concatenate([np.asarray(nb, dtype=int) for nb in neighbours])
        used = np.array([len(nb) for nb in neighbours], dtype=int)

        frames = None if frame is None else np.asarray(frame, dtype=complex).reshape(1, self.n)
        for start in range(0, g_idx.size, PAIR_CHUNK):
            gs = g_idx[start:start + PAIR_CHUNK]
            ps = p_idx[start:start + PAIR_CHUNK]
            pts = Z[gs]
            fr = pts if frames is None else np.repeat(frames, gs.size, axis=0)
            contrib = peak_jets(centers[ps], self.coefficients[active][ps], pts, fr,
                                self.degree, order)
            np.add.at(out, gs, contrib)

        dropped = active.size - used
        tail = dropped * float(norms.max()) * unit_jet_bound(cutoff, self.n, self.degree, order)
        if frames is not None:
            tail = tail * np.exp(math.pi / 2 * np.sum(np.abs(Z - frames) ** 2, axis=-1))
        return JetBatch(out, np.asarray(tail, dtype=float), used, dropped, basis_out)

    def section_value(self, z: Any) -> np.ndarray:
        """Holomorphic value f(z) (frame centered at the origin, where sigma(1, 0) = 1)."""
        return self.jets(z, 0, frame=np.zeros(self.n)).coefficients[:, :, 0].squeeze(0)

    def section_norm(self, z: Any) -> float:
        return float(np.linalg.norm(self.jets(z, 0).coefficients[0, :, 0]))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "lattice": self.lattice.to_dict(),
            "classes": self.classes.to_dict(),
            "degree": self.degree,
            "m": self.m,
            "coefficients": encode_array(self.coefficients),
            "epsilons": list(self.epsilons),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "PeakFamily":
        lattice = Lattice.from_dict(data["lattice"])
        degree = int(data["degree"])
        m = int(data["m"])
        size = math.comb(lattice.n + degree, lattice.n)
        coeffs = decode_array(data["coefficients"]).reshape(lattice.size, m, size)
        return cls(
            lattice=lattice,
            classes=ColorClasses.from_dict(data["classes"]),
            degree=degree,
            m=m,
            coefficients=coeffs,
            epsilons=[float(e) for e in data.get("epsilons", [])],
        )


def empty_family(lattice: Lattice, classes: ColorClasses, degree: int, m: int) -> PeakFamily:
    size = math.comb(lattice.n + degree, lattice.n)
    return PeakFamily(lattice, classes, degree, m, np.zeros((lattice.size, m, size), dtype=complex))


def random_family(
    lattice: Lattice, classes: ColorClasses, degree: int, m: int, seed: int, scale: float = 1.0
) -> PeakFamily:
    """Seeded family with coefficients uniform in the disc of radius scale."""
    rng = np.random.default_rng(seed)
    size = math.comb(lattice.n + degree, lattice.n)
    shape = (lattice.size, m, size)
    radius = scale * np.sqrt(rng.random(shape))
    angle = 2 * math.pi * rng.random(shape)
    return PeakFamily(lattice, classes, degree, m, radius * np.exp(1j * angle))


def jet_at(family: PeakFamily, p: Any, z: Any, l: int, cutoff: float = DEFAULT_CUTOFF) -> JetEvaluation:
    """l-jet of the family's section at z in the frame centered at p."""
    return family.jets(np.asarray(z, dtype=complex).reshape(1, -1), l, frame=p, cutoff=cutoff).jet(0)


@dataclass
class Region:
    """Grid on the closed polydisk of the given radius around a center."""

    radius: float = 1.0
    grid_step: float = 0.25

    def __post_init__(self):
        if self.grid_step <= 0 or self.radius < 0:
            raise InvalidArgumentError("region needs radius >= 0 and grid_step > 0")
        if self.grid_step > COARSE_GRID:
            logger.warning(
                f"grid step {self.grid_step} is coarse relative to the unit peak scale"
            )

    @property
    def is_coarse(self) -> bool:
        return self.grid_step > COARSE_GRID

    def disk_offsets(self) -> np.ndarray:
        k = int(math.floor(self.radius / self.grid_step + 1e-12))
        axis = self.grid_step * np.arange(-k, k + 1)
        x, y = np.meshgrid(axis, axis, indexing="ij")
        pts = (x + 1j * y).ravel()
        return pts[np.abs(pts) <= self.radius + 1e-12]

    def offsets(self, n: int) -> np.ndarray:
        disk = self.disk_offsets()
        grids = np.meshgrid(*([disk] * n), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def around(self, center: Any) -> np.ndarray:
        center = np.asarray(center, dtype=complex).ravel()
        return center[None, :] + self.offsets(center.size)

    def around_all(self, centers: np.ndarray) -> np.ndarray:
        if centers.shape[0] == 0:
            return np.zeros((0, centers.shape[1]), dtype=complex)
        return np.concatenate([self.around(c) for c in centers])


@lru_cache(maxsize=None)
def peak_envelope_constant(n: int, degree: int, order: int) -> float:
    """Smallest C with B(r) <= C exp(-r^2 / C) on r in [0, 12].

    B(r) bounds the jet norm, in the frame at z, of a peak with ||H|| <= 1 at
    distance r: every |delta_i| <= r and |a_i| <= pi r.
    """
    table = transfer_table(n, degree, order)
    r = ENVELOPE_RADII
    delta = np.repeat(r[:, None], n, axis=1).astype(complex)
    T = np.abs(table.evaluate(delta, math.pi * delta))
    envelope = np.exp(-math.pi / 2 * r**2) * np.max(np.sum(T, axis=1), axis=1)

    def fits(c: float) -> bool:
        return bool(np.all(envelope <= c * np.exp(-(r**2) / c)))

    lo, hi = 1e-3, 1e3
    for _ in range(100):
        mid = math.sqrt(lo * hi)
        if fits(mid):
            hi = mid
        else:
            lo = mid
    return hi


def annulus_count_bound(a: int, n: int, separation: float) -> float:
    """Packing bound on lattice points at distance in [a, a + 1) from any point."""
    half = separation / 2
    outer = (a + 1 + half) ** (2 * n)
    inner = max(a - half, 0.0) ** (2 * n)
    return (outer - inner) / half ** (2 * n)


def series_constant(n: int, degree: int, order: int, separation: float, start: int = 0) -> float:
    """sum_{a >= start} C exp(-a^2 / C) P(a) with the fitted envelope constant."""
    c = peak_envelope_constant(n, degree, order)
    total = 0.0
    a = start
    while True:
        term = c * math.exp(-(a**2) / c) * annulus_count_bound(a, n, separation)
        total += term
        if a > start + 3 and term < 1e-18 * max(total, 1e-300):
            break
        a += 1
    return total


@dataclass
class PeakSumBound:
    """Grid maximum of jet norms against the closed-form Gaussian-series bound."""

    grid_max: float
    series_bound: float
    constant: float
    max_coefficient: float

    @property
    def holds(self) -> bool:
        return self.grid_max <= self.series_bound * (1 + 1e-12) + 1e-300

    def to_dict(self) -> Dict[str, Any]:
        return {
            "grid_max": self.grid_max,
            "series_bound": self.series_bound,
            "constant": self.constant,
            "max_coefficient": self.max_coefficient,
            "holds": self.holds,
        }


def sum_of_peaks_bound(
    family: PeakFamily,
    l: Optional[int] = None,
    region: Optional[Region] = None,
    test_points: Optional[np.ndarray] = None,
) -> PeakSumBound:
    """Uniform jet-norm bound of the sum of peaks over a test grid.

    Raises:
        InvalidArgumentError: If the model weight is not comparable to
            ||z||^2 on the test grid, which the series bound needs.
    """
    order = family.degree if l is None else l
    if test_points is None:
        test_points = (region or Region()).around_all(family.lattice.points)
    if not FlatModel(family.n).weight_bounds_hold(test_points):
        raise InvalidArgumentError("weight is not within [pi/4, 3 pi/4] ||z||^2 on the test grid")
    max_h = float(family.coefficient_norms().max(initial=0.0))
    constant = peak_envelope_constant(family.n, family.degree, order)
    series = max_h * series_constant(family.n, family.degree, order, family.lattice.separation)
    if max_h == 0 or test_points.shape[0] == 0:
        return PeakSumBound(0.0, series, constant, max_h)
    grid_max = float(family.jets(test_points, order).norms().max())
    bound = PeakSumBound(grid_max, series, constant, max_h)
    if not bound.holds:
        logger.warning(f"grid max {grid_max:.4g} exceeds series bound {series:.4g}")
    return bound


@dataclass
class FarPeaksTail:
    """Jet norm at q of a family vanishing within distance D of q."""

    D: float
    jet_norm: float
    bound: float

    @property
    def holds(self) -> bool:
        return self.jet_norm <= self.bound

    def to_dict(self) -> Dict[str, Any]:
        return {"D": self.D, "jet_norm": self.jet_norm, "bound": self.bound, "holds": self.holds}


def far_peaks_tail_bound(
    family: PeakFamily, q_index: int, D: float, l: Optional[int] = None
) -> FarPeaksTail:
    """Bound sum_{a >= floor(D)} C exp(-a^2 / C) P(a) max ||H|| for peaks beyond D."""
    order = family.degree if l is None else l
    q = family.lattice.points[q_index]
    dist = np.linalg.norm(to_real(family.lattice.points - q[None, :]), axis=1)
    near = (dist <= D) & (family.coefficient_norms() > 0)
    if np.any(near):
        raise InvalidArgumentError(f"family has nonzero peaks within distance {D} of q")
    max_h = float(family.coefficient_norms().max(initial=0.0))
    series = series_constant(family.n, family.degree, order, family.lattice.separation,
                             start=int(math.floor(D)))
    jet = family.jets(q.reshape(1, -1), order).jet(0)
    return FarPeaksTail(D=float(D), jet_norm=jet.norm(), bound=max_h * series)


def transversality_pointwise(coefficients: np.ndarray, n: int) -> np.ndarray:
    """max(||c0||, sigma_min(c1)) for jets of shape (..., m, size >= n + 1)."""
    c0 = np.linalg.norm(coefficients[..., :, 0], axis=-1)
    c1 = coefficients[..., :, 1:n + 1]
    sigma = np.linalg.svd(c1, compute_uv=False)[..., -1]
    return np.maximum(c0, sigma)


@dataclass
class TransversalityMargin:
    """Largest eta with sigma_min > eta wherever the norm is below eta, on a grid."""

    margin: float
    grid_points: int
    coarse: bool

    def to_dict(self) -> Dict[str, Any]:
        return {"margin": self.margin, "grid_points": self.grid_points, "coarse": self.coarse}


def bisect_eta(norms: np.ndarray, sigmas: np.ndarray, iterations: int = 100) -> float:
    """sup { eta : every point has norm >= eta or sigma > eta }."""
    if norms.size == 0:
        return math.inf

    def feasible(eta: float) -> bool:
        return bool(np.all((norms >= eta) | (sigmas > eta)))

    lo, hi = 0.0, float(max(norms.max(), sigmas.max())) * 2 + 1e-300
    if not feasible(lo):
        return 0.0
    for _ in range(iterations):
        mid = (lo + hi) / 2
        if feasible(mid):
            lo = mid
        else:
            hi = mid
    return lo


def transversality_margin(
    family: PeakFamily,
    region: Optional[Region] = None,
    centers: Optional[np.ndarray] = None,
    grid_step: Optional[float] = None,
) -> TransversalityMargin:
    """Transversality-to-zero margin of the family's section on a grid."""
    if family.m > family.n:
        raise InvalidArgumentError(f"transversality needs m <= n, got m={family.m}, n={family.n}")
    if region is None:
        region = Region(grid_step=grid_step if grid_step is not None else 0.25)
    centers = family.lattice.points if centers is None else np.asarray(centers, dtype=complex)
    grid = region.around_all(centers)
    order = max(1, family.degree)
    jets = family.jets(grid, order).coefficients
    norms = np.linalg.norm(jets[:, :, 0], axis=-1)
    sigmas = np.zeros(0)
    if grid.shape[0]:
        sigmas = np.linalg.svd(jets[:, :, 1:family.n + 1], compute_uv=False)[:, -1]
    margin = bisect_eta(norms, sigmas)
    return TransversalityMargin(margin=float(margin), grid_points=int(grid.shape[0]),
                                coarse=region.is_coarse)
