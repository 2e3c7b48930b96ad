"""Derivative bounds for holomorphic disks in zero sets of peak families across scales.

At scale k the flat model stands for the k-th power of a line bundle rescaled
by sqrt(k). A disk with ||f'(0)|| = rho in flat units has derivative
rho / sqrt(k) in the k-metric. Disks are searched as graphs over tangent
directions at sampled zero-set points, inside the evaluation disk of radius
sqrt(k) around the base point; the sqrt(k)-normalized value is rho itself.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ciscurv.brody import DiskMap, brody_reparametrize
from ciscurv.errors import CiscurvError, InvalidArgumentError
from ciscurv.globalization import ScheduleConstants, closed_form_schedule, globalize
from ciscurv.lattice import color_classes, discretize
from ciscurv.oracles import LineTangencyOracle
from ciscurv.peaks import DEFAULT_CUTOFF, PeakFamily, Region, empty_family, random_family
from ciscurv.polynomial import monomial_basis
from ciscurv.zero_sets import zero_set_sample

logger = logging.getLogger(__name__)

CSV_HEADER = ["k", "best_derivative", "normalized", "brody_derivative", "candidates", "failures"]
DISK_DEGREE = 15
RADIAL_STEPS = 16
NEWTON_STEPS = 8
BISECTION_STEPS = 8
STEP_TOL = 1e-10
RANDOM = "random"
LINE_TANGENCY = "linetangency"
LINEAR = "linear"


def build_scale_family(
    k: int,
    n: int = 2,
    degree: int = 2,
    seed: int = 0,
    scale: float = 0.75,
    oracle: str = RANDOM,
    D: float = 1.0,
    eps1: float = 0.2,
    constants: Optional[ScheduleConstants] = None,
    budget: int = 64,
    region: Optional[Region] = None,
    cutoff: float = DEFAULT_CUTOFF,
) -> PeakFamily:
    """Hypersurface family on the box of radius sqrt(k) + 1.

    Args:
        k: Scale parameter (>= 1).
        n: Ambient dimension.
        degree: Degree of the H polynomials, also the tangency order avoided.
        seed: Seed for coefficients or avoidance samples.
        scale: Lattice scale.
        oracle: "random" for unit random coefficients, "linetangency" to
            globalize against the line-tangency locus, "linear" for the
            control section with a single linear peak at the origin.
        D, eps1, constants, budget, region, cutoff: Globalization settings.
    """
    if k < 1:
        raise InvalidArgumentError(f"scale k must be >= 1, got {k}")
    lattice = discretize(n, math.sqrt(k) + 1, scale)
    classes = color_classes(lattice, D)
    if oracle == RANDOM:
        return random_family(lattice, classes, degree, 1, seed)
    if oracle == LINEAR:
        family = empty_family(lattice, classes, max(degree, 1), 1)
        coeffs = family.coefficients.copy()
        origin = int(np.argmin(np.linalg.norm(lattice.points, axis=1)))
        coeffs[origin, 0, monomial_basis(n, family.degree).index((1,) + (0,) * (n - 1))] = 1.0
        return family.with_coefficients(coeffs)
    if oracle == LINE_TANGENCY:
        constants = constants or ScheduleConstants()
        schedule = closed_form_schedule(classes.count, constants, eps1)
        family, _ = globalize(lattice, classes, LineTangencyOracle(n, degree), schedule,
                              constants, degree, region, budget, seed, cutoff=cutoff, measure=False)
        return family
    raise InvalidArgumentError(f"unknown family kind {oracle!r}")


@dataclass
class GraphDisk:
    """Disk f(zeta) = point + zeta rho t + phi(zeta) N in the zero set."""

    valid: bool
    rho: float
    disk: Optional[DiskMap] = None
    reason: str = ""


def graph_disk(
    family: PeakFamily,
    point: Any,
    direction: Any,
    radius: float,
    bound: Optional[float] = None,
    degree: int = DISK_DEGREE,
    cutoff: float = DEFAULT_CUTOFF,
) -> GraphDisk:
    """Solve s(point + zeta radius t + phi N) = 0 for |zeta| <= 1 by radial continuation.

    Values are taken in the fixed frame at point, which has the same zeros
    as s. N is the normal direction conj(ds)/||ds|| at point. The disk is
    valid when Newton converges at every grid node and the graph stays within
    distance bound of point.
    """
    if family.m != 1:
        raise InvalidArgumentError(f"graph disks need a hypersurface family, got m={family.m}")
    point = np.asarray(point, dtype=complex).ravel()
    t = np.asarray(direction, dtype=complex).ravel()
    t = t / np.linalg.norm(t)
    jet = family.jets(point[None, :], 1, frame=point, cutoff=cutoff).coefficients[0, 0]
    grad = jet[1:family.n + 1]
    if np.linalg.norm(grad) == 0:
        return GraphDisk(False, radius, reason="singular base point")
    normal = np.conj(grad) / np.linalg.norm(grad)
    bound = math.inf if bound is None else bound

    count = 4 * (degree + 1)
    zeta = np.exp(2j * math.pi * np.arange(count) / count)
    phi = np.zeros(count, dtype=complex)
    for r in np.linspace(0, 1, RADIAL_STEPS + 1)[1:]:
        base = point[None, :] + (r * radius * zeta)[:, None] * t[None, :]
        converged = False
        for _ in range(NEWTON_STEPS):
            Y = base + phi[:, None] * normal[None, :]
            jets = family.jets(Y, 1, frame=point, cutoff=cutoff).coefficients[:, 0, :]
            slope = jets[:, 1:family.n + 1] @ normal
            if np.any(np.abs(slope) == 0):
                return GraphDisk(False, radius, reason="vertical tangent")
            step = -jets[:, 0] / slope
            phi = phi + step
            if np.max(np.abs(step)) < STEP_TOL * max(1.0, np.max(np.abs(phi))):
                converged = True
                break
        if not converged or not np.all(np.isfinite(phi)):
            return GraphDisk(False, radius, reason=f"no convergence at radius {r:.3f}")
        Y = base + phi[:, None] * normal[None, :]
        if np.max(np.linalg.norm(Y - point[None, :], axis=1)) > bound * (1 + 1e-9):
            return GraphDisk(False, radius, reason="left the evaluation disk")

    boundary = point[None, :] + radius * zeta[:, None] * t[None, :] + phi[:, None] * normal[None, :]
    coeffs = np.fft.fft(boundary, axis=0) / count
    tail = float(np.abs(coeffs[degree + 1: count // 2]).max(initial=0.0))
    return GraphDisk(True, radius, DiskMap(coeffs[: degree + 1], 1.0, tail))


def largest_graph_disk(
    family: PeakFamily, point: Any, direction: Any, limit: float, cutoff: float = DEFAULT_CUTOFF
) -> GraphDisk:
    """Bisection on the radius of valid graph disks in [0, limit]."""
    top = graph_disk(family, point, direction, limit, bound=limit, cutoff=cutoff)
    if top.valid:
        return top
    lo, hi = 0.0, limit
    best = GraphDisk(False, 0.0, reason=top.reason)
    for _ in range(BISECTION_STEPS):
        mid = (lo + hi) / 2
        trial = graph_disk(family, point, direction, mid, bound=limit, cutoff=cutoff)
        if trial.valid:
            lo, best = mid, trial
        else:
            hi = mid
    return best


@dataclass
class ScaleResult:
    k: int
    best_derivative: Optional[float]
    normalized: Optional[float]
    brody_derivative: Optional[float]
    candidates: int
    failures: int
    notes: List[str] = field(default_factory=list)

    def as_row(self) -> List[Any]:
        return [self.k, self.best_derivative, self.normalized, self.brody_derivative,
                self.candidates, self.failures]

    def to_dict(self) -> Dict[str, Any]:
        return dict(zip(CSV_HEADER, self.as_row()), notes=list(self.notes))


def disk_search(
    k: int,
    family: PeakFamily,
    candidates: int = 4,
    seed: int = 0,
    zero_tol: float = 1e-9,
    rank_tol: float = 1e-8,
    cutoff: float = DEFAULT_CUTOFF,
) -> ScaleResult:
    """Largest graph disk over sampled zero-set points and their tangent directions."""
    root = math.sqrt(k)
    rng = np.random.default_rng([seed, k])
    shape = (8 * candidates, family.n)
    seeds = root * ((rng.random(shape) - 0.5) + 1j * (rng.random(shape) - 0.5))
    sample = zero_set_sample(family, seeds, zero_tol, rank_tol)
    germs = sample.germs[:candidates]
    result = ScaleResult(k, None, None, None, len(germs), sample.dropped)
    best: Optional[GraphDisk] = None
    for germ in germs:
        coords = rng.standard_normal(germ.d) + 1j * rng.standard_normal(germ.d)
        direction = germ.ambient_vector(coords / np.linalg.norm(coords))
        disk = largest_graph_disk(family, germ.p, direction, root, cutoff)
        if not disk.valid:
            result.failures += 1
            result.notes.append(f"no valid disk at {np.round(germ.p, 4).tolist()}: {disk.reason}")
            continue
        if best is None or disk.rho > best.rho:
            best = disk
    if best is None:
        logger.warning(f"Scale k={k}: no valid disk among {len(germs)} candidate(s)")
        return result
    result.normalized = best.rho
    result.best_derivative = best.rho / root
    try:
        g, _ = brody_reparametrize(best.disk)
        result.brody_derivative = float(np.linalg.norm(g.derivative(0))) / root
    except CiscurvError as e:
        result.notes.append(f"reparametrization failed: {e}")
    logger.info(f"Scale k={k}: best rho {best.rho:.4f} over {len(germs)} candidate(s)")
    return result


def derivative_bound_experiment(
    families: Sequence[Tuple[int, PeakFamily]],
    candidates: int = 4,
    seed: int = 0,
    zero_tol: float = 1e-9,
    rank_tol: float = 1e-8,
    cutoff: float = DEFAULT_CUTOFF,
) -> List[ScaleResult]:
    """Run the disk search at each (k, family); the CSV is CSV_HEADER plus as_row()."""
    results = []
    for k, family in families:
        try:
            results.append(disk_search(k, family, candidates, seed, zero_tol, rank_tol, cutoff))
        except CiscurvError as e:
            logger.warning(f"Scale k={k} failed: {e}")
            results.append(ScaleResult(k, None, None, None, 0, 1, [str(e)]))
    return results
