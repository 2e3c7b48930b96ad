"""Sampling the zero set of a peak family and packaging local germs."""

import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np

from ciscurv.errors import CiscurvError, InvalidArgumentError
from ciscurv.germ import DEFAULT_RANK_TOL, DEFAULT_ZERO_TOL, Germ
from ciscurv.peaks import PeakFamily
from ciscurv.report_writer import encode_array

logger = logging.getLogger(__name__)

NEWTON_STEPS = 30
DEDUPE_TOL = 1e-6


@dataclass
class ZeroSetSample:
    """Germs of {s = 0} at the converged seeds, and the count of dropped seeds."""

    germs: List[Germ] = field(default_factory=list)
    points: List[np.ndarray] = field(default_factory=list)
    dropped: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "points": [encode_array(p) for p in self.points],
            "germs": [g.to_dict() for g in self.germs],
            "dropped": self.dropped,
        }


def _newton(family: PeakFamily, seed: np.ndarray) -> np.ndarray:
    """Minimal-norm Newton steps on the holomorphic value of s in the frame at the seed."""
    y = seed.copy()
    for _ in range(NEWTON_STEPS):
        jet = family.jets(y[None, :], 1, frame=seed).coefficients[0]
        value, J = jet[:, 0], jet[:, 1:family.n + 1]
        if np.linalg.norm(value) == 0:
            break
        # jets in a fixed frame are Taylor coefficients at y of one holomorphic function
        step = np.linalg.lstsq(J, -value, rcond=None)[0]
        y = y + step
        if np.linalg.norm(step) < 1e-15:
            break
    return y


def zero_set_sample(
    family: PeakFamily,
    seeds: Any,
    zero_tol: float = DEFAULT_ZERO_TOL,
    rank_tol: float = DEFAULT_RANK_TOL,
) -> ZeroSetSample:
    """Newton from each seed; keep points where s vanishes with surjective derivative.

    Each kept point z is packaged as the germ at 0 of the degree-2 Taylor
    polynomial of R_z s, the section in the frame centered at z, translated
    back to z. A nonvanishing holomorphic factor does not change the zero
    set, so this germ has the same frames and second fundamental form.

    Args:
        family: Peak family with m < n.
        seeds: Starting points, shape (S, n).
        zero_tol: Residual threshold on the frame value at the point.
        rank_tol: Lower bound on the smallest singular value of the derivative.

    Returns:
        ZeroSetSample; seeds that do not converge are counted in dropped.
    """
    if family.m >= family.n:
        raise InvalidArgumentError(f"zero sets need m < n, got m={family.m}, n={family.n}")
    seeds = np.asarray(seeds, dtype=complex).reshape(-1, family.n)
    sample = ZeroSetSample()
    if not np.any(family.coefficient_norms() > 0):
        return sample

    for seed in seeds:
        y = _newton(family, seed)
        jet = family.jets(y[None, :], 2).jet(0)
        c = jet.coefficients
        value = np.linalg.norm(c[:, 0])
        sigma = np.linalg.svd(c[:, 1:family.n + 1], compute_uv=False).min()
        if not np.isfinite(value) or value > zero_tol or sigma < rank_tol:
            sample.dropped += 1
            continue
        if any(np.linalg.norm(y - q) < DEDUPE_TOL for q in sample.points):
            continue
        local = jet.to_polynomial_map().translate([-x for x in y.tolist()])
        try:
            germ = Germ.create(local, y, zero_tol=zero_tol, rank_tol=rank_tol)
        except CiscurvError as e:
            logger.debug(f"Dropping zero at {y}: {e}")
            sample.dropped += 1
            continue
        sample.points.append(germ.p)
        sample.germs.append(germ)

    if sample.dropped:
        logger.warning(f"{sample.dropped} of {seeds.shape[0]} seed(s) did not reach the zero set")
    logger.debug(f"Zero set sample: {len(sample.germs)} germ(s)")
    return sample
