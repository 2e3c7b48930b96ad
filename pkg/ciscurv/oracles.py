"""Fibered distance evaluators for the bad loci used by local avoidance.

Every oracle maps jets taken in the frame centered at the evaluation point,
shape (..., m, size), to nonnegative margins of shape (...). A margin of
zero means the jet lies in the locus.
"""

import logging
import math

import numpy as np

from ciscurv.errors import InvalidArgumentError
from ciscurv.peaks import transversality_pointwise
from ciscurv.polynomial import monomial_basis
from ciscurv.sphere_search import random_unit_vectors

logger = logging.getLogger(__name__)

ZERO_JET = "zerojet"
TRANSVERSALITY = "transversality"
LINE_TANGENCY = "linetangency"
ORACLE_NAMES = (ZERO_JET, TRANSVERSALITY, LINE_TANGENCY)

THETA_STEPS = 13
PHI_STEPS = 24
REFINE_STEPS = 5
HIGH_DIM_DIRECTIONS = 512


class LocusOracle:
    """Base class: subclasses set name and order and implement margins."""

    name = ""

    def __init__(self, n: int, m: int, order: int):
        self.n = n
        self.m = m
        self.order = order

    def margins(self, jets: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def to_dict(self):
        return {"name": self.name, "n": self.n, "m": self.m, "order": self.order}


class ZeroJetOracle(LocusOracle):
    """Distance to the zero jet, max coefficient modulus."""

    name = ZERO_JET

    def margins(self, jets: np.ndarray) -> np.ndarray:
        return np.max(np.abs(jets), axis=(-2, -1))


class TransversalityOracle(LocusOracle):
    """Distance to jets H with H(0) = 0 and dH(0) not surjective."""

    name = TRANSVERSALITY

    def __init__(self, n: int, m: int):
        if m > n:
            raise InvalidArgumentError(f"transversality needs m <= n, got m={m}, n={n}")
        super().__init__(n, m, 1)

    def margins(self, jets: np.ndarray) -> np.ndarray:
        return transversality_pointwise(jets, self.n)


def _sphere_angles(theta: np.ndarray, phi: np.ndarray) -> np.ndarray:
    return np.stack([np.cos(theta) + 0j, np.sin(theta) * np.exp(1j * phi)], axis=-1)


class LineTangencyOracle(LocusOracle):
    """Distance to hypersurface jets tangent to order l with some line through 0.

    The margin is max(|H(0)|, min_b max_{1<=k<=l} |sum_{|a|=k} c_a b^a|) over
    unit directions b. For n = 2 the directions are a (theta, phi) grid
    followed by a finer local grid around each jet's best direction.
    """

    name = LINE_TANGENCY

    def __init__(self, n: int, l: int, m: int = 1):
        if m != 1:
            raise InvalidArgumentError(f"line tangency is defined for hypersurfaces, got m={m}")
        if l < 1:
            raise InvalidArgumentError(f"tangency order must be >= 1, got {l}")
        super().__init__(n, 1, l)
        self.basis = monomial_basis(n, l)
        self.exponents = np.array(self.basis, dtype=int).reshape(len(self.basis), n)
        degrees = self.exponents.sum(axis=1)
        self.masks = np.stack([(degrees == k).astype(float) for k in range(1, l + 1)])
        self.directions = self._directions()

    def _directions(self) -> np.ndarray:
        if self.n == 1:
            return np.ones((1, 1), dtype=complex)
        if self.n == 2:
            theta = np.linspace(0, math.pi / 2, THETA_STEPS)
            phi = np.linspace(0, 2 * math.pi, PHI_STEPS, endpoint=False)
            t, p = np.meshgrid(theta, phi, indexing="ij")
            return _sphere_angles(t.ravel(), p.ravel())
        raw = random_unit_vectors(np.random.default_rng(0), self.n, HIGH_DIM_DIRECTIONS)
        return np.vstack([np.eye(self.n, dtype=complex), raw])

    def _powers(self, directions: np.ndarray) -> np.ndarray:
        """b^a for every direction and basis monomial, shape (..., size)."""
        return np.prod(directions[..., None, :] ** self.exponents, axis=-1)

    def _scores(self, coeffs: np.ndarray, powers: np.ndarray) -> np.ndarray:
        """max_k |restriction coefficient k| for coeffs (G, size), powers (G?, K, size)."""
        best = None
        for mask in self.masks:
            if powers.ndim == 2:
                value = np.abs(coeffs @ (powers * mask).T)
            else:
                value = np.abs(np.einsum("gs,gks->gk", coeffs, powers * mask))
            best = value if best is None else np.maximum(best, value)
        return best

    def margins(self, jets: np.ndarray) -> np.ndarray:
        shape = jets.shape[:-2]
        coeffs = jets.reshape(-1, jets.shape[-1])
        c0 = np.abs(coeffs[:, 0])
        scores = self._scores(coeffs, self._powers(self.directions))
        index = np.argmin(scores, axis=1)
        tangency = scores[np.arange(coeffs.shape[0]), index]
        if self.n == 2:
            tangency = np.minimum(tangency, self._refine(coeffs, index))
        return np.maximum(c0, tangency).reshape(shape)

    def _refine(self, coeffs: np.ndarray, index: np.ndarray) -> np.ndarray:
        dt = (math.pi / 2) / (THETA_STEPS - 1)
        dp = 2 * math.pi / PHI_STEPS
        t0 = (index // PHI_STEPS) * dt
        p0 = (index % PHI_STEPS) * dp
        offsets = np.linspace(-0.5, 0.5, REFINE_STEPS)
        ot, op = np.meshgrid(offsets * dt, offsets * dp, indexing="ij")
        theta = np.clip(t0[:, None] + ot.ravel()[None, :], 0, math.pi / 2)
        phi = p0[:, None] + op.ravel()[None, :]
        powers = self._powers(_sphere_angles(theta, phi))
        return self._scores(coeffs, powers).min(axis=1)


def make_oracle(name: str, n: int, m: int, l: int) -> LocusOracle:
    """Build an oracle by CLI name."""
    if name == ZERO_JET:
        return ZeroJetOracle(n, m, l)
    if name == TRANSVERSALITY:
        return TransversalityOracle(n, m)
    if name == LINE_TANGENCY:
        return LineTangencyOracle(n, l, m)
    raise InvalidArgumentError(f"unknown oracle {name!r}; expected one of {', '.join(ORACLE_NAMES)}")
