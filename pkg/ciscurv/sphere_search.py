"""Seeded multistart minimization over the unit sphere of C^dim.

The unit sphere of C^dim is handled as the real (2 dim - 1)-sphere. Each
restart runs projected gradient descent with Armijo backtracking; gradients
are central finite differences in real coordinates. Zero-finding polish goes
through scipy's least_squares on the complex residual split into real parts.
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.optimize import least_squares

from ciscurv.errors import InvalidArgumentError
from ciscurv.worker_pool import run_jobs

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]
Refiner = Callable[[np.ndarray], Optional[np.ndarray]]

FD_STEP = 1e-7
ARMIJO = 1e-4
MIN_STEP = 1e-14


@dataclass
class SphereMinimum:
    """Best point found by a multistart search."""

    value: float
    point: np.ndarray
    evaluations: int
    restart: int


def pack(v: np.ndarray) -> np.ndarray:
    """Complex vector -> real vector [Re v, Im v]."""
    v = np.asarray(v, dtype=complex).ravel()
    return np.concatenate([v.real, v.imag])


def unpack(x: np.ndarray) -> np.ndarray:
    """Inverse of pack."""
    half = x.size // 2
    return x[:half] + 1j * x[half:]


def normalize(v: np.ndarray) -> np.ndarray:
    norm = np.linalg.norm(v)
    if norm == 0:
        raise InvalidArgumentError("cannot normalize the zero vector")
    return v / norm


def random_unit_vectors(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    """count uniformly distributed unit vectors in C^dim, shape (count, dim)."""
    raw = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    return raw / np.linalg.norm(raw, axis=1, keepdims=True)


def padded_singular_values(A: np.ndarray, count: int) -> np.ndarray:
    """Ascending singular values of A as a map on C^count, padded with kernel zeros."""
    if A.size == 0:
        return np.zeros(count)
    values = np.sort(np.linalg.svd(A, compute_uv=False))
    out = np.zeros(count)
    out[count - values.size:] = values
    return out


def _gradient(objective: Objective, x: np.ndarray) -> Tuple[np.ndarray, int]:
    grad = np.zeros_like(x)
    for k in range(x.size):
        step = np.zeros_like(x)
        step[k] = FD_STEP
        grad[k] = (objective(unpack(x + step)) - objective(unpack(x - step))) / (2 * FD_STEP)
    return grad, 2 * x.size


def _descend(
    objective: Objective, start: np.ndarray, max_iter: int, tol: float
) -> Tuple[float, np.ndarray, int]:
    x = pack(start)
    value = objective(start)
    evaluations = 1
    step = 0.5
    for _ in range(max_iter):
        grad, used = _gradient(objective, x)
        evaluations += used
        grad = grad - (grad @ x) * x  # tangent to the sphere
        slope = float(grad @ grad)
        if slope < tol**2:
            break
        t = step
        while t > MIN_STEP:
            candidate = x - t * grad
            candidate = candidate / np.linalg.norm(candidate)
            cand_value = objective(unpack(candidate))
            evaluations += 1
            if cand_value <= value - ARMIJO * t * slope:
                break
            t *= 0.5
        else:
            break
        x, value = candidate, cand_value
        step = min(2 * t, 1.0)
    return float(value), unpack(x), evaluations


def minimize_on_sphere(
    objective: Objective,
    dim: int,
    restarts: int = 64,
    seed: int = 0,
    refine: Optional[Refiner] = None,
    max_iter: int = 200,
    polish: int = 3,
    tol: float = 1e-12,
    workers: int = 1,
) -> SphereMinimum:
    """Minimize objective over unit vectors of C^dim.

    Starts are the coordinate vectors followed by `restarts` seeded random
    vectors. The `polish` best candidates are passed to refine, whose output
    replaces a candidate only if it is at least as good.

    Args:
        objective: Function of a complex vector of length dim.
        dim: Complex dimension of the sphere.
        restarts: Number of random starts (>= 1).
        seed: Seed for numpy's default_rng.
        refine: Optional local polishing step returning a new point or None.
        max_iter: Gradient iterations per restart.
        polish: How many best candidates to refine.
        tol: Gradient-norm stopping tolerance.
        workers: Parallel restarts through the worker pool.

    Returns:
        SphereMinimum with the smallest value, ties broken by restart index.
    """
    if restarts < 1:
        raise InvalidArgumentError(f"restarts must be >= 1, got {restarts}")
    if dim < 1:
        raise InvalidArgumentError(f"sphere dimension must be >= 1, got {dim}")

    rng = np.random.default_rng(seed)
    starts = np.vstack([np.eye(dim, dtype=complex), random_unit_vectors(rng, dim, restarts)])
    jobs = [
        (index, (lambda s=start: _descend(objective, s, max_iter, tol)))
        for index, start in enumerate(starts)
    ]
    outcomes = run_jobs(jobs, max_workers=workers)
    candidates: List[SphereMinimum] = [
        SphereMinimum(value=v, point=p, evaluations=e, restart=i)
        for i, (v, p, e) in enumerate(outcomes)
    ]
    total = sum(c.evaluations for c in candidates)
    candidates.sort(key=lambda c: (c.value, c.restart))

    if refine is not None:
        for candidate in candidates[:polish]:
            refined = refine(candidate.point)
            if refined is None:
                continue
            refined = normalize(refined)
            refined_value = float(objective(refined))
            total += 1
            if refined_value <= candidate.value:
                candidate.value, candidate.point = refined_value, refined
        candidates.sort(key=lambda c: (c.value, c.restart))

    best = candidates[0]
    best.evaluations = total
    logger.debug(
        f"Sphere search dim={dim}: best {best.value:.3e} from restart {best.restart} "
        f"({total} evaluations)"
    )
    return best


def refine_zero(
    residual: Callable[[np.ndarray], np.ndarray], x0: np.ndarray, max_nfev: int = 400
) -> Tuple[np.ndarray, float]:
    """Gauss-Newton polish of a complex residual starting at x0.

    Returns:
        The polished complex vector and the final residual norm.
    """

    def real_residual(x: np.ndarray) -> np.ndarray:
        r = np.asarray(residual(unpack(x)), dtype=complex).ravel()
        return np.concatenate([r.real, r.imag])

    solution = least_squares(
        real_residual,
        pack(x0),
        method="trf",
        xtol=1e-15,
        ftol=1e-15,
        gtol=1e-15,
        max_nfev=max_nfev,
    )
    return unpack(solution.x), float(np.linalg.norm(real_residual(solution.x)))
