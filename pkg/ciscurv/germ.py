"""Complete-intersection germs {F = 0} in flat C^n and their curvature.

For a submanifold of flat space every curvature quantity is a norm of the
second fundamental form II, computed here by implicit differentiation of
F(y(w)) = 0 along the graph parametrization y(w) = p + T w + N phi(w).
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import scipy.linalg

from ciscurv.errors import DegenerateGermError, InvalidArgumentError, raise_collected
from ciscurv.polynomial import PolynomialMap
from ciscurv.report_writer import encode_array
from ciscurv.sphere_search import (
    minimize_on_sphere,
    normalize,
    padded_singular_values,
    refine_zero,
)

logger = logging.getLogger(__name__)

DEFAULT_ZERO_TOL = 1e-9
DEFAULT_RANK_TOL = 1e-8
UNIT_TOL = 1e-9
NEWTON_STEPS = 8

CERTIFIED_NEGATIVE = "certified_negative"
CERTIFIED_NOT_NEGATIVE = "certified_not_negative"
NUMERICALLY_NEGATIVE = "numerically_negative_with_margin"
INCONCLUSIVE = "inconclusive"


def canonical_basis(B: np.ndarray) -> np.ndarray:
    """Orthonormal basis of span(B) that depends only on the subspace.

    Columns of the orthogonal projector are picked by pivoted QR, kept in
    ascending index order, and orthonormalized with positive diagonal in R.
    Coordinate subspaces come out as the coordinate vectors.
    """
    k = B.shape[1]
    if k == 0:
        return B.copy()
    projector = B @ B.conj().T
    _, _, pivots = scipy.linalg.qr(projector, pivoting=True)
    chosen = np.sort(pivots[:k])
    Q, R = np.linalg.qr(projector[:, chosen])
    diag = np.diag(R)
    phases = np.ones_like(diag)
    nonzero = diag != 0
    phases[nonzero] = diag[nonzero] / np.abs(diag[nonzero])
    return Q * phases[None, :]


@dataclass(frozen=True)
class Frames:
    """Orthonormal tangent and normal frames at the base point.

    Attributes:
        T_basis: Shape (n, d), spans ker dF(p).
        N_basis: Shape (n, n - d), spans the orthogonal complement.
    """

    T_basis: np.ndarray
    N_basis: np.ndarray

    def orthonormality_defect(self) -> float:
        basis = np.hstack([self.T_basis, self.N_basis])
        return float(np.max(np.abs(basis.conj().T @ basis - np.eye(basis.shape[1]))))

    def to_dict(self) -> Dict[str, Any]:
        return {"T_basis": encode_array(self.T_basis), "N_basis": encode_array(self.N_basis)}


@dataclass(frozen=True)
class SFF:
    """Second fundamental form: II(e_i, e_j) = sum_r coeffs[i, j, r] f_r."""

    coeffs: np.ndarray

    @property
    def d(self) -> int:
        return self.coeffs.shape[0]

    @property
    def m(self) -> int:
        return self.coeffs.shape[2]

    def __call__(self, u: Any, v: Any) -> np.ndarray:
        """II(u, v) in the normal frame; complex bilinear in (u, v)."""
        return np.einsum("i,j,ijr->r", np.asarray(u), np.asarray(v), self.coeffs)

    def matrix(self, u: Any) -> np.ndarray:
        """Matrix of II(u, .): T -> N, shape (m, d)."""
        return np.einsum("i,ijr->rj", np.asarray(u), self.coeffs)

    def ricci_matrix(self) -> np.ndarray:
        """Matrix of v -> II(v, .) from T to Hom(T, N), shape (d m, d)."""
        return self.coeffs.transpose(1, 2, 0).reshape(self.d * self.m, self.d)

    def norm(self) -> float:
        return float(np.linalg.norm(self.coeffs))

    def max_asymmetry(self) -> float:
        return float(np.max(np.abs(self.coeffs - self.coeffs.transpose(1, 0, 2)), initial=0.0))

    def to_dict(self) -> Dict[str, Any]:
        return {"coeffs": encode_array(self.coeffs)}


@dataclass
class CurvatureReport:
    """Curvature values plus a negativity verdict."""

    kind: str
    values: Dict[str, float]
    negativity_certificate: str
    margin: Optional[float] = None
    witness: Optional[np.ndarray] = None
    notes: List[str] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "kind": self.kind,
            "values": {k: float(v) for k, v in sorted(self.values.items())},
            "negativity_certificate": self.negativity_certificate,
            "margin": None if self.margin is None else float(self.margin),
            "witness": None if self.witness is None else encode_array(self.witness),
            "notes": list(self.notes),
        }


class Germ:
    """Germ of {F = 0} at p with cached frames and second fundamental form.

    Build with Germ.create, which checks the base point and surjectivity.
    """

    def __init__(
        self,
        F: PolynomialMap,
        p: np.ndarray,
        d: int,
        frames: Frames,
        zero_tol: float,
        rank_tol: float,
        sigma_min: float,
    ):
        self.F = F
        self.p = p
        self.d = d
        self.frames = frames
        self.zero_tol = zero_tol
        self.rank_tol = rank_tol
        self.sigma_min = sigma_min

    @property
    def n(self) -> int:
        return self.F.n

    @property
    def m(self) -> int:
        return self.F.m

    @classmethod
    def create(
        cls,
        F: PolynomialMap,
        p: Sequence[complex],
        d: Optional[int] = None,
        zero_tol: float = DEFAULT_ZERO_TOL,
        rank_tol: float = DEFAULT_RANK_TOL,
    ) -> "Germ":
        """Validate the base point, project it onto {F = 0} and build frames.

        Raises:
            InvalidArgumentError: On dimension mismatches.
            DegenerateGermError: If ||F(p)|| > zero_tol or dF(p) is not surjective.
        """
        point = np.asarray(p, dtype=complex).ravel()
        errors = []
        if point.size != F.n:
            errors.append(f"point has {point.size} coordinates, map has n={F.n}")
        if F.m < 1:
            errors.append("the defining map needs at least one component")
        if d is not None and d != F.n - F.m:
            errors.append(f"d={d} does not match n - m = {F.n - F.m}")
        raise_collected(errors, "Invalid germ")
        d = F.n - F.m
        if d < 1:
            raise InvalidArgumentError(f"germ dimension must be >= 1, got {d}")

        residual = float(np.linalg.norm(F.evaluate(point)))
        if residual > zero_tol:
            raise DegenerateGermError(
                f"base point is off the zero set: ||F(p)|| = {residual:.3e} > {zero_tol:.1e}"
            )
        point = _newton_project(F, point)

        J = F.jacobian(point)
        _, S, Vh = np.linalg.svd(J)
        sigma_min = float(S.min())
        if sigma_min < rank_tol:
            raise DegenerateGermError(
                f"dF(p) is not surjective: smallest singular value {sigma_min:.3e} < {rank_tol:.1e}"
            )
        T0 = Vh[F.m:].conj().T
        N0 = Vh[: F.m].conj().T
        frames = Frames(T_basis=canonical_basis(T0), N_basis=canonical_basis(N0))
        logger.debug(f"Germ n={F.n} d={d} at residual {residual:.2e}, sigma_min {sigma_min:.3e}")
        return cls(F, point, d, frames, zero_tol, rank_tol, sigma_min)

    @cached_property
    def sff(self) -> SFF:
        T, N = self.frames.T_basis, self.frames.N_basis
        hess = self.F.hessian(self.p)
        restricted = self.F.jacobian(self.p) @ N
        rhs = -np.einsum("rab,ai,bj->ijr", hess, T, T)
        solved = np.linalg.solve(restricted, rhs.reshape(self.d * self.d, self.m).T)
        coeffs = solved.T.reshape(self.d, self.d, self.m)
        return SFF(coeffs=coeffs)

    def ii(self, u: Any, v: Any) -> np.ndarray:
        return self.sff(u, v)

    def ambient_vector(self, v: Any) -> np.ndarray:
        """Tangent-frame coordinates -> vector in C^n."""
        return self.frames.T_basis @ np.asarray(v, dtype=complex)

    def tangent_coordinates(self, x: Any) -> np.ndarray:
        """Orthogonal projection of an ambient vector onto T, in frame coordinates."""
        return self.frames.T_basis.conj().T @ np.asarray(x, dtype=complex)

    def transform(self, U: Any) -> "Germ":
        """The germ of F o U^-1 at U p for a unitary U."""
        U = np.asarray(U, dtype=complex)
        G = self.F.compose_affine(U.conj().T, [0] * self.n)
        return Germ.create(G, U @ self.p, self.d, self.zero_tol, self.rank_tol)

    def ricci_form(self) -> np.ndarray:
        """Hermitian R with Ric(v) = -2 v^H R v."""
        M = self.sff.ricci_matrix()
        return M.conj().T @ M

    def ricci_eigenvalues(self) -> np.ndarray:
        """Eigenvalues of the Ricci form, ascending (all <= 0)."""
        return np.sort(-2.0 * np.linalg.eigvalsh(self.ricci_form()))

    def check_unit(self, v: Any, name: str = "v") -> np.ndarray:
        vec = np.asarray(v, dtype=complex).ravel()
        if vec.size != self.d:
            raise InvalidArgumentError(f"{name} must have {self.d} tangent coordinates, got {vec.size}")
        if abs(np.linalg.norm(vec) - 1.0) > UNIT_TOL:
            raise InvalidArgumentError(f"{name} must be a unit vector, got norm {np.linalg.norm(vec):.6g}")
        return vec

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "d": self.d,
            "point": encode_array(self.p),
            "sigma_min": self.sigma_min,
            "frames": self.frames.to_dict(),
        }


def _newton_project(F: PolynomialMap, point: np.ndarray) -> np.ndarray:
    """Minimal-norm Newton steps onto {F = 0}."""
    for _ in range(NEWTON_STEPS):
        value = F.evaluate(point)
        if np.linalg.norm(value) == 0:
            break
        step = np.linalg.lstsq(F.jacobian(point), -value, rcond=None)[0]
        point = point + step
        if np.linalg.norm(step) < 1e-16 * max(1.0, np.linalg.norm(point)):
            break
    return point


def frames(germ: Germ) -> Frames:
    return germ.frames


def second_fundamental_form(germ: Germ) -> SFF:
    return germ.sff


def ricci(germ: Germ, v: Any) -> float:
    """Ric(v, v) = -2 sum_i ||II(e_i, v)||^2 for unit v."""
    vec = germ.check_unit(v)
    return -2.0 * float(np.linalg.norm(germ.sff.matrix(vec)) ** 2)


def scalar(germ: Germ) -> float:
    """Scal = -4 sum_ij ||II(e_i, e_j)||^2."""
    return -4.0 * germ.sff.norm() ** 2


def scalar_from_ricci(germ: Germ) -> float:
    """Scal = 2 sum_i Ric(e_i, e_i)."""
    return 2.0 * sum(ricci(germ, e) for e in np.eye(germ.d, dtype=complex))


def holsec(germ: Germ, v: Any) -> float:
    """HolSec(v) = -2 ||II(v, v)||^2 for unit v."""
    vec = germ.check_unit(v)
    return -2.0 * float(np.linalg.norm(germ.sff(vec, vec)) ** 2)


def holbisec(germ: Germ, v: Any, w: Any) -> float:
    """HolBisec(v, w) = -2 ||II(v, w)||^2 for unit v, w."""
    a = germ.check_unit(v, "v")
    b = germ.check_unit(w, "w")
    return -2.0 * float(np.linalg.norm(germ.sff(a, b)) ** 2)


def _rank_verdict(value: float, rank_tol: float) -> str:
    if value >= rank_tol:
        return CERTIFIED_NEGATIVE
    if value <= rank_tol / 10:
        return CERTIFIED_NOT_NEGATIVE
    return INCONCLUSIVE


def certify_ricci_negative(germ: Germ) -> CurvatureReport:
    """Ricci < 0 everywhere on T iff v -> II(v, .) is injective."""
    M = germ.sff.ricci_matrix()
    _, S, Vh = np.linalg.svd(M)
    sigma = float(padded_singular_values(M, germ.d)[0])
    verdict = _rank_verdict(sigma, germ.rank_tol)
    eigenvalues = germ.ricci_eigenvalues()
    return CurvatureReport(
        kind="ricci",
        values={"sigma_min": sigma, "max_ricci": float(eigenvalues[-1]),
                "min_ricci": float(eigenvalues[0])},
        negativity_certificate=verdict,
        margin=sigma,
        witness=Vh[-1].conj(),
    )


def certify_scalar_negative(germ: Germ) -> CurvatureReport:
    """Scal < 0 iff II does not vanish."""
    norm = germ.sff.norm()
    return CurvatureReport(
        kind="scalar",
        values={"scalar": scalar(germ), "scalar_from_ricci": scalar_from_ricci(germ),
                "sff_norm": norm},
        negativity_certificate=_rank_verdict(norm, germ.rank_tol),
        margin=norm,
    )


def _sphere_verdict(kind: str, germ: Germ, margin: float, witness: np.ndarray,
                    values: Dict[str, float]) -> CurvatureReport:
    if margin < germ.zero_tol:
        verdict = CERTIFIED_NOT_NEGATIVE
        notes = ["zero of the quadric system found by polishing"]
    else:
        verdict = NUMERICALLY_NEGATIVE
        notes = ["multistart minimum over the unit sphere; not a global certificate"]
    return CurvatureReport(kind, values, verdict, margin=margin, witness=witness, notes=notes)


def certify_holsec_negative(
    germ: Germ, restarts: int = 64, seed: int = 0, workers: int = 1
) -> CurvatureReport:
    """Minimize ||II(v, v)|| over the unit sphere of T."""
    sff = germ.sff

    def objective(v: np.ndarray) -> float:
        return float(np.linalg.norm(sff(v, v)) ** 2)

    def polish(v: np.ndarray) -> np.ndarray:
        point, _ = refine_zero(lambda x: np.concatenate([sff(x, x), [np.vdot(x, x) - 1]]), v)
        return point

    best = minimize_on_sphere(objective, germ.d, restarts, seed, refine=polish, workers=workers)
    margin = float(np.sqrt(max(best.value, 0.0)))
    return _sphere_verdict(
        "holsec", germ, margin, best.point, {"min_holsec_norm": margin,
                                             "max_holsec": -2.0 * margin**2}
    )


def certify_holbisec_negative(
    germ: Germ, restarts: int = 64, seed: int = 0, workers: int = 1
) -> CurvatureReport:
    """Minimize sigma_min(II(v, .)) over the unit sphere of T."""
    sff = germ.sff
    d = germ.d

    def objective(v: np.ndarray) -> float:
        return float(padded_singular_values(sff.matrix(v), d)[0] ** 2)

    def polish(v: np.ndarray) -> np.ndarray:
        w0 = _kernel_vector(sff, v)

        def residual(x: np.ndarray) -> np.ndarray:
            a, b = x[:d], x[d:]
            return np.concatenate([sff(a, b), [np.vdot(a, a) - 1, np.vdot(b, b) - 1]])

        point, _ = refine_zero(residual, np.concatenate([v, w0]))
        return point[:d]

    best = minimize_on_sphere(objective, d, restarts, seed, refine=polish, workers=workers)
    margin = float(np.sqrt(max(best.value, 0.0)))
    return _sphere_verdict(
        "holbisec", germ, margin, best.point, {"min_holbisec_norm": margin,
                                               "max_holbisec": -2.0 * margin**2}
    )


def _kernel_vector(sff: SFF, v: np.ndarray) -> np.ndarray:
    Vh = np.linalg.svd(sff.matrix(v))[2]
    return Vh[-1].conj()


def certify(germ: Germ, kind: str, restarts: int = 64, seed: int = 0,
            workers: int = 1) -> CurvatureReport:
    """Dispatch to the certifier for kind."""
    if kind == "ricci":
        return certify_ricci_negative(germ)
    if kind == "scalar":
        return certify_scalar_negative(germ)
    if kind == "holsec":
        return certify_holsec_negative(germ, restarts, seed, workers)
    if kind == "holbisec":
        return certify_holbisec_negative(germ, restarts, seed, workers)
    raise InvalidArgumentError(f"unknown curvature kind: {kind}")


def curvature_values(germ: Germ, v: Optional[Any] = None, w: Optional[Any] = None) -> Dict[str, Any]:
    """All curvature quantities at the base point, for reports."""
    vec = normalize(np.asarray(v, dtype=complex)) if v is not None else np.eye(germ.d)[0]
    other = normalize(np.asarray(w, dtype=complex)) if w is not None else vec
    return {
        "ricci": ricci(germ, vec),
        "scalar": scalar(germ),
        "scalar_from_ricci": scalar_from_ricci(germ),
        "holsec": holsec(germ, vec),
        "holbisec": holbisec(germ, vec, other),
        "ricci_eigenvalues": [float(x) for x in germ.ricci_eigenvalues()],
        "sff_norm": germ.sff.norm(),
        "sff_asymmetry": germ.sff.max_asymmetry(),
        "vector": encode_array(vec),
    }


def holsec_finite_difference(g: PolynomialMap, v: Any, h: float = 1e-3) -> float:
    """Holomorphic sectional curvature of the graph of g at 0 from its metric.

    The induced metric along the complex line t -> t v is
    psi(t) = ||v||^2 + ||dg(t v) v||^2 and, with dg(0) = 0,
    HolSec(v) = -Laplacian(psi)(0) / 2 for unit v. The Laplacian is the
    five-point stencil at step h in the t-plane.

    Raises:
        InvalidArgumentError: If g has terms of degree < 2 or v is not unit.
    """
    if any(sum(alpha) < 2 for _, alpha in g.terms):
        raise InvalidArgumentError("graph function must vanish to order 2 at the origin")
    vec = np.asarray(v, dtype=complex).ravel()
    if abs(np.linalg.norm(vec) - 1.0) > UNIT_TOL:
        raise InvalidArgumentError("v must be a unit vector")

    def psi(t: complex) -> float:
        return float(np.linalg.norm(g.jacobian(t * vec) @ vec) ** 2)

    laplacian = (psi(h) + psi(-h) + psi(1j * h) + psi(-1j * h) - 4 * psi(0)) / h**2
    return -laplacian / 2.0
