"""Exterior-power Gauss maps and Griffiths positivity of wedge bundles.

Positivity of the l-th exterior power of the cotangent bundle of {F = 0} at p
is equivalent to immersivity of the Gauss map into P(wedge^l), which holds
iff every kernel K_u = {u' : II(u, u') = 0} has dimension < l. The normal
bundle variant is only checked through immersivity.
"""

import logging
from dataclasses import dataclass, field
from itertools import combinations
from math import comb
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ciscurv.errors import InvalidArgumentError
from ciscurv.germ import Germ
from ciscurv.report_writer import encode_array
from ciscurv.sphere_search import (
    minimize_on_sphere,
    normalize,
    padded_singular_values,
    refine_zero,
)

logger = logging.getLogger(__name__)

COTANGENT = "cotangent"
NORMAL = "normal"
MIN_STEP = 1e-6
MAX_STEP = 1e-2
GRAPH_NEWTON_STEPS = 12


@dataclass
class KernelProfile:
    """Largest kernel of II(u, .) over unit u, and the l-th singular value margin."""

    l: int
    max_kernel_dim: int
    witness_u: np.ndarray
    margin: float
    singular_minima: List[float] = field(default_factory=list)

    @property
    def positivity_holds(self) -> bool:
        return self.max_kernel_dim < self.l

    def to_dict(self) -> Dict[str, Any]:
        return {
            "l": self.l,
            "max_kernel_dim": self.max_kernel_dim,
            "witness_u": encode_array(self.witness_u),
            "margin": self.margin,
            "singular_minima": list(self.singular_minima),
            "positivity_holds": self.positivity_holds,
        }


@dataclass
class IILambda:
    """Matrix of u_1 ^ ... ^ u_l -> sum_a (-1)^a II(u, u_a) (x) (wedge without u_a).

    Rows are indexed by (normal index r, (l-1)-subset), columns by l-subsets,
    both in itertools.combinations order.
    """

    u: np.ndarray
    l: int
    matrix: np.ndarray
    row_labels: List[Tuple[int, Tuple[int, ...]]]
    column_labels: List[Tuple[int, ...]]

    def kernel_dim(self, tol: float) -> int:
        values = padded_singular_values(self.matrix, self.matrix.shape[1])
        return int(np.sum(values <= tol))

    def apply(self, wedge: np.ndarray) -> np.ndarray:
        return self.matrix @ wedge


@dataclass
class GaussImmersionReport:
    """Numerical immersivity of the Gauss map into P(wedge^l)."""

    bundle: str
    l: int
    immersion: bool
    sigma_min: float
    witness_u: np.ndarray
    residual: float
    warning: Optional[str] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "bundle": self.bundle,
            "l": self.l,
            "immersion": self.immersion,
            "sigma_min": self.sigma_min,
            "witness_u": encode_array(self.witness_u),
            "residual": self.residual,
            "warning": self.warning,
        }


def compound(A: np.ndarray, l: int) -> np.ndarray:
    """l-th compound matrix: all l x l minors in combinations order."""
    rows = list(combinations(range(A.shape[0]), l))
    cols = list(combinations(range(A.shape[1]), l))
    out = np.zeros((len(rows), len(cols)), dtype=complex)
    for i, R in enumerate(rows):
        for j, C in enumerate(cols):
            out[i, j] = np.linalg.det(A[np.ix_(R, C)])
    return out


def wedge_coordinates(vectors: np.ndarray) -> np.ndarray:
    """Coordinates of v_1 ^ ... ^ v_l for the columns of a (d, l) array."""
    return compound(np.asarray(vectors, dtype=complex), vectors.shape[1])[:, 0]


def _check_order(l: int, top: int, what: str) -> None:
    if not 1 <= l <= top:
        raise InvalidArgumentError(f"l must satisfy 1 <= l <= {top} for the {what}, got {l}")


def ii_lambda(germ: Germ, u: Any, l: int) -> IILambda:
    """The operator IILambda^l_u as a matrix in induced wedge frames."""
    _check_order(l, germ.d, "tangent bundle")
    vec = np.asarray(u, dtype=complex).ravel()
    if np.linalg.norm(vec) == 0:
        raise InvalidArgumentError("u must be nonzero")
    d, m = germ.d, germ.m
    M = germ.sff.matrix(vec)  # (m, d)
    columns = list(combinations(range(d), l))
    lower = list(combinations(range(d), l - 1))
    lower_index = {S: i for i, S in enumerate(lower)}
    rows = [(r, S) for r in range(m) for S in lower]
    out = np.zeros((m * len(lower), len(columns)), dtype=complex)
    for c, S in enumerate(columns):
        for a, s in enumerate(S):
            rest = S[:a] + S[a + 1:]
            sign = -1.0 if a % 2 else 1.0
            for r in range(m):
                out[r * len(lower) + lower_index[rest], c] += sign * M[r, s]
    return IILambda(u=vec, l=l, matrix=out, row_labels=rows, column_labels=columns)


def kernel_profile(
    germ: Germ, l: int, restarts: int = 64, seed: int = 0, workers: int = 1
) -> KernelProfile:
    """Minimize the k-th smallest singular value of II(u, .) over unit u, k = 1..d."""
    _check_order(l, germ.d, "tangent bundle")
    d = germ.d
    sff = germ.sff
    minima: List[float] = []
    witnesses: List[np.ndarray] = []

    for k in range(1, d + 1):

        def objective(u: np.ndarray, k: int = k) -> float:
            return float(padded_singular_values(sff.matrix(u), d)[k - 1])

        def polish(u: np.ndarray, k: int = k) -> np.ndarray:
            X0 = np.linalg.svd(sff.matrix(u))[2].conj().T[:, d - k:]

            def residual(x: np.ndarray) -> np.ndarray:
                v, X = x[:d], x[d:].reshape(d, k)
                return np.concatenate([
                    (sff.matrix(v) @ X).ravel(),
                    (X.conj().T @ X - np.eye(k)).ravel(),
                    [np.vdot(v, v) - 1],
                ])

            point, _ = refine_zero(residual, np.concatenate([u, X0.ravel()]))
            return point[:d]

        best = minimize_on_sphere(objective, d, restarts, seed + k, refine=polish, workers=workers)
        minima.append(float(best.value))
        witnesses.append(best.point)

    tol = germ.rank_tol
    max_kernel_dim = max((k for k in range(1, d + 1) if minima[k - 1] <= tol), default=0)
    witness = witnesses[max_kernel_dim - 1] if max_kernel_dim else witnesses[0]
    profile = KernelProfile(
        l=l,
        max_kernel_dim=max_kernel_dim,
        witness_u=witness,
        margin=minima[l - 1],
        singular_minima=minima,
    )
    logger.debug(f"Kernel profile d={d}: minima {minima}, max kernel {max_kernel_dim}")
    return profile


def _graph_point(germ: Germ, w: np.ndarray) -> np.ndarray:
    """Point y(w) = p + T w + N phi(w) on {F = 0} by Newton in phi."""
    T, N = germ.frames.T_basis, germ.frames.N_basis
    base = germ.p + T @ w
    phi = np.zeros(germ.m, dtype=complex)
    for _ in range(GRAPH_NEWTON_STEPS):
        y = base + N @ phi
        value = germ.F.evaluate(y)
        if np.linalg.norm(value) < 1e-15:
            break
        phi = phi - np.linalg.solve(germ.F.jacobian(y) @ N, value)
    return base + N @ phi


def _frame_at(germ: Germ, w: np.ndarray, bundle: str) -> np.ndarray:
    y = _graph_point(germ, w)
    J = germ.F.jacobian(y)
    if bundle == NORMAL:
        return J.T  # conormal frame, holomorphic along the zero set
    T, N = germ.frames.T_basis, germ.frames.N_basis
    return T - N @ np.linalg.solve(J @ N, J @ T)


def _wedge_derivatives(germ: Germ, l: int, bundle: str, h: float) -> List[np.ndarray]:
    derivs = []
    for j in range(germ.d):
        e = np.zeros(germ.d, dtype=complex)
        e[j] = 1.0
        values = {s: compound(_frame_at(germ, s * h * e, bundle), l) for s in (-2, -1, 1, 2)}
        derivs.append((values[-2] - 8 * values[-1] + 8 * values[1] - values[2]) / (12 * h))
    return derivs


def gauss_immersion_check(
    germ: Germ,
    l: int,
    h: float = 1e-4,
    bundle: str = COTANGENT,
    restarts: int = 64,
    seed: int = 0,
    workers: int = 1,
) -> GaussImmersionReport:
    """Finite-difference immersivity test of the wedge^l Gauss map at p.

    With Lambda(w) the l-th compound of the frame along the graph
    parametrization and Q the projection away from range(Lambda(0)), the map
    is an immersion iff Q d_u Lambda is injective for every unit u.
    """
    if bundle not in (COTANGENT, NORMAL):
        raise InvalidArgumentError(f"unknown bundle: {bundle}")
    rank = germ.d if bundle == COTANGENT else germ.m
    _check_order(l, rank, f"{bundle} bundle")

    warning = None
    if h < MIN_STEP or h > MAX_STEP:
        warning = f"step {h:g} outside [{MIN_STEP:g}, {MAX_STEP:g}]: derivative poorly conditioned"
        logger.warning(warning)

    base = compound(_frame_at(germ, np.zeros(germ.d, dtype=complex), bundle), l)
    Qb, _ = np.linalg.qr(base)
    projector = np.eye(base.shape[0]) - Qb @ Qb.conj().T
    derivs = [projector @ D for D in _wedge_derivatives(germ, l, bundle, h)]
    coarse = [projector @ D for D in _wedge_derivatives(germ, l, bundle, 2 * h)]
    residual = float(max((np.max(np.abs(a - b)) for a, b in zip(derivs, coarse)), default=0.0))
    stack = np.stack(derivs)  # (d, rows, cols)
    width = base.shape[1]

    def pencil(u: np.ndarray) -> np.ndarray:
        return np.einsum("j,jab->ab", u, stack)

    def objective(u: np.ndarray) -> float:
        return float(padded_singular_values(pencil(u), width)[0])

    def polish(u: np.ndarray) -> np.ndarray:
        x0 = np.linalg.svd(pencil(u))[2][-1].conj()

        def res(z: np.ndarray) -> np.ndarray:
            v, x = z[: germ.d], z[germ.d:]
            return np.concatenate([pencil(v) @ x, [np.vdot(v, v) - 1, np.vdot(x, x) - 1]])

        point, _ = refine_zero(res, np.concatenate([u, x0]))
        return point[: germ.d]

    best = minimize_on_sphere(objective, germ.d, restarts, seed, refine=polish, workers=workers)
    sigma = float(best.value)
    report = GaussImmersionReport(
        bundle=bundle,
        l=l,
        immersion=sigma > germ.rank_tol,
        sigma_min=sigma,
        witness_u=normalize(best.point),
        residual=residual,
        warning=warning,
    )
    logger.debug(f"Gauss immersion {bundle} l={l}: sigma_min {sigma:.3e}, residual {residual:.1e}")
    return report


def exterior_report(
    germ: Germ,
    l: int,
    bundle: str = COTANGENT,
    h: float = 1e-4,
    restarts: int = 64,
    seed: int = 0,
    workers: int = 1,
) -> Dict[str, Any]:
    """Combined verdict for the wedge^l positivity question."""
    check = gauss_immersion_check(germ, l, h, bundle, restarts, seed, workers)
    result: Dict[str, Any] = {"bundle": bundle, "l": l, "immersion": check.to_dict()}
    if bundle == COTANGENT:
        profile = kernel_profile(germ, l, restarts, seed, workers)
        result["kernel_profile"] = profile.to_dict()
        result["verdict"] = profile.positivity_holds
        result["wedge_dimension"] = comb(germ.d, l)
        if profile.positivity_holds != check.immersion and profile.margin > 10 * germ.rank_tol:
            logger.warning(f"kernel and immersion verdicts disagree at l={l}")
    else:
        result["verdict"] = check.immersion
    return result
