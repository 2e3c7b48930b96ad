"""Discretizations of the flat model and their partition into color classes.

Points are a scaled checkerboard lattice D_{2n} (integer vectors with even
coordinate sum) in R^{2n} = C^n, z_j = x_j + i x_{n+j}. With scale a the
minimal distance is a * sqrt(2) and the covering radius is a * rho(n).
"""

import logging
import math
from dataclasses import dataclass
from typing import Any, Dict, List

import numpy as np

from ciscurv.errors import InvalidArgumentError, raise_collected

logger = logging.getLogger(__name__)

DEFAULT_SCALE = 0.75

# Covering radius of the unscaled D_{2n}.
COVERING_RADIUS = {1: 1.0, 2: 1.0, 3: math.sqrt(6) / 2}


def to_complex(coords: np.ndarray, n: int) -> np.ndarray:
    """Real coordinates (..., 2n) -> complex points (..., n)."""
    return coords[..., :n] + 1j * coords[..., n:]


def to_real(points: np.ndarray) -> np.ndarray:
    """Complex points (..., n) -> real coordinates (..., 2n)."""
    points = np.asarray(points, dtype=complex)
    return np.concatenate([points.real, points.imag], axis=-1)


@dataclass
class Lattice:
    """Finite piece of the scaled checkerboard lattice in a max-norm box."""

    n: int
    radius: float
    scale: float
    integer_coords: np.ndarray  # (N, 2n) ints with even sum

    @property
    def points(self) -> np.ndarray:
        """Complex lattice points, shape (N, n)."""
        return to_complex(self.scale * self.integer_coords.astype(float), self.n)

    @property
    def size(self) -> int:
        return int(self.integer_coords.shape[0])

    @property
    def separation(self) -> float:
        return self.scale * math.sqrt(2)

    @property
    def covering_radius(self) -> float:
        return self.scale * COVERING_RADIUS[self.n]

    def min_pairwise_distance(self) -> float:
        """Exhaustive check of the separation; inf for fewer than two points."""
        if self.size < 2:
            return math.inf
        coords = self.scale * self.integer_coords.astype(float)
        diff = coords[:, None, :] - coords[None, :, :]
        dist = np.sqrt(np.sum(diff**2, axis=-1))
        np.fill_diagonal(dist, np.inf)
        return float(dist.min())

    def covering_defect(self, samples: np.ndarray) -> float:
        """Largest distance from the given real sample points to the lattice."""
        coords = self.scale * self.integer_coords.astype(float)
        diff = samples[:, None, :] - coords[None, :, :]
        return float(np.sqrt(np.sum(diff**2, axis=-1)).min(axis=1).max())

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "radius": self.radius,
            "scale": self.scale,
            "integer_coords": self.integer_coords.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "Lattice":
        n = int(data["n"])
        coords = np.asarray(data["integer_coords"], dtype=int).reshape(-1, 2 * n)
        return cls(n=n, radius=float(data["radius"]), scale=float(data["scale"]),
                   integer_coords=coords)


def validate_scale(n: int, scale: float) -> None:
    """Check separation >= 1 and covering radius < 1 for the given scale."""
    errors = []
    if n not in COVERING_RADIUS:
        errors.append(f"lattice discretization supports 1 <= n <= 3, got n={n}")
    else:
        if scale * math.sqrt(2) < 1:
            errors.append(f"scale {scale} gives separation {scale * math.sqrt(2):.4f} < 1")
        if scale * COVERING_RADIUS[n] >= 1:
            errors.append(
                f"scale {scale} gives covering radius {scale * COVERING_RADIUS[n]:.4f} >= 1"
            )
    raise_collected(errors, "Invalid lattice scale")


def discretize(n: int, R: float, scale: float = DEFAULT_SCALE) -> Lattice:
    """All scaled D_{2n} points with max-norm at most R, in lexicographic order."""
    if R < 0:
        raise InvalidArgumentError(f"box radius must be >= 0, got {R}")
    validate_scale(n, scale)
    bound = int(math.floor(R / scale + 1e-12))
    axis = np.arange(-bound, bound + 1)
    grids = np.meshgrid(*([axis] * (2 * n)), indexing="ij")
    coords = np.stack([g.ravel() for g in grids], axis=1)
    coords = coords[np.sum(coords, axis=1) % 2 == 0]
    logger.debug(f"Discretized n={n} box R={R}: {coords.shape[0]} points")
    return Lattice(n=n, radius=float(R), scale=scale, integer_coords=coords.astype(int))


@dataclass
class ColorClasses:
    """Partition by residues of the integer coordinates modulo an odd k.

    Two distinct points in one class differ by k times a nonzero D_{2n}
    vector, so they are at distance >= k * scale * sqrt(2) >= D.
    """

    D: float
    modulus: int
    labels: np.ndarray  # (N,) class index per lattice point

    @property
    def count(self) -> int:
        return int(self.labels.max()) + 1 if self.labels.size else 0

    def members(self, index: int) -> List[int]:
        return [int(i) for i in np.flatnonzero(self.labels == index)]

    def min_within_class_distance(self, lattice: Lattice) -> float:
        coords = lattice.scale * lattice.integer_coords.astype(float)
        best = math.inf
        for c in range(self.count):
            idx = self.members(c)
            if len(idx) < 2:
                continue
            sub = coords[idx]
            dist = np.sqrt(np.sum((sub[:, None, :] - sub[None, :, :]) ** 2, axis=-1))
            np.fill_diagonal(dist, np.inf)
            best = min(best, float(dist.min()))
        return best

    def class_bound(self, n: int) -> int:
        return (math.ceil(self.D) + 1) ** (2 * n)

    def to_dict(self) -> Dict[str, Any]:
        return {"D": self.D, "modulus": self.modulus, "labels": self.labels.tolist()}

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "ColorClasses":
        return cls(D=float(data["D"]), modulus=int(data["modulus"]),
                   labels=np.asarray(data["labels"], dtype=int))


def class_modulus(D: float, scale: float) -> int:
    """Smallest odd k with k * scale * sqrt(2) >= D."""
    k = max(1, math.ceil(D / (scale * math.sqrt(2)) - 1e-12))
    return k if k % 2 == 1 else k + 1


def color_classes(lattice: Lattice, D: float) -> ColorClasses:
    """Partition the lattice so that same-class points are at least D apart."""
    if D < 1:
        raise InvalidArgumentError(f"class separation D must be >= 1, got {D}")
    k = class_modulus(D, lattice.scale)
    residues = np.mod(lattice.integer_coords, k)
    if lattice.size == 0:
        return ColorClasses(D=float(D), modulus=k, labels=np.zeros(0, dtype=int))
    _, labels = np.unique(residues, axis=0, return_inverse=True)
    classes = ColorClasses(D=float(D), modulus=k, labels=labels.astype(int).ravel())
    logger.debug(f"Color classes for D={D}: modulus {k}, {classes.count} classes")
    return classes
