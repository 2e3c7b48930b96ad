"""Local avoidance by sampled perturbation and the class-sequential globalization sweep.

Classes are processed in order with decreasing perturbation sizes eps_i.
Within a class every point perturbs against the family as it stood when the
class started, so the points of one class are independent jobs. Each point
draws its samples from a seed derived from (seed, class, integer lattice
coordinates), which keeps runs identical across thread counts and makes a
point's samples independent of the box radius.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import partial
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ciscurv.errors import InvalidArgumentError, ScheduleError
from ciscurv.lattice import ColorClasses, Lattice, color_classes, discretize
from ciscurv.oracles import LocusOracle
from ciscurv.peaks import (
    DEFAULT_CUTOFF,
    PeakFamily,
    Region,
    empty_family,
    peak_envelope_constant,
    peak_jets,
    transfer_table,
)
from ciscurv.report_writer import encode_array
from ciscurv.worker_pool import run_jobs

logger = logging.getLogger(__name__)

DEFAULT_BUDGET = 512
DEFAULT_BATCH = 32
DEFAULT_WINDOW = 0.5
RELATIVE_TOL = 1e-12


@dataclass(frozen=True)
class ScheduleConstants:
    """Constants C and N0 of the schedule inequalities."""

    c: float = 0.5
    n0: int = 2

    def to_dict(self) -> Dict[str, Any]:
        return {"c": self.c, "n0": self.n0}


def target_margin(eps: float, n0: int) -> float:
    """eta = eps (-log eps)^(-N0)."""
    return eps * (-math.log(eps)) ** (-n0)


def closed_form_schedule(count: int, constants: ScheduleConstants, eps1: float = 0.2) -> List[float]:
    """eps_{i+1} = eps_i (-log eps_i)^(-N0) / (4 C), starting from eps1."""
    if count < 0:
        raise InvalidArgumentError(f"class count must be >= 0, got {count}")
    schedule: List[float] = []
    eps = eps1
    for i in range(count):
        if eps <= 0:
            raise ScheduleError(f"schedule underflows to zero at index {i + 1}")
        schedule.append(eps)
        eps = target_margin(eps, constants.n0) / (4 * constants.c)
    return schedule


def validate_schedule(schedule: Sequence[float], constants: ScheduleConstants, D: float) -> None:
    """Check the schedule against both globalization inequalities.

    Raises:
        ScheduleError: Naming the first violated condition and its index.
    """
    c, n0 = constants.c, constants.n0
    for i, eps in enumerate(schedule, start=1):
        if not 0 < eps < 0.25:
            raise ScheduleError(f"eps_{i} = {eps:.6g} must satisfy 0 < eps < 1/4")
        if i > 1 and eps >= schedule[i - 2]:
            raise ScheduleError(f"schedule is not strictly decreasing at index {i}")
        bound = 0.25 * (-math.log(eps)) ** (-n0)
        if c * math.exp(-(D**2) / c) > bound:
            raise ScheduleError(
                f"C exp(-D^2/C) <= 1/4 (-log eps_{i})^(-N0) fails at index {i}: "
                f"{c * math.exp(-(D ** 2) / c):.6g} > {bound:.6g}"
            )
        if i < len(schedule):
            nxt = schedule[i]
            if c * nxt > eps * bound * (1 + RELATIVE_TOL):
                raise ScheduleError(
                    f"C eps_{i + 1} <= 1/4 eps_{i} (-log eps_{i})^(-N0) fails at index {i}: "
                    f"{c * nxt:.6g} > {eps * bound:.6g}"
                )


def calibrate_constants(n: int, degree: int, order: int, n0: int = 2) -> ScheduleConstants:
    """Measured envelope constant of a unit peak, paired with the configured N0."""
    c = peak_envelope_constant(n, degree, order)
    logger.info(f"Calibrated envelope constant C={c:.4g} for n={n}, degree={degree}, order={order}")
    return ScheduleConstants(c=c, n0=n0)


@dataclass
class AvoidanceResult:
    """Outcome of one local avoidance."""

    H: np.ndarray  # (m, size)
    achieved_margin: float
    target: float
    below_target: bool
    samples: int

    def to_dict(self) -> Dict[str, Any]:
        return {
            "achieved_margin": self.achieved_margin,
            "target": self.target,
            "below_target": self.below_target,
            "samples": self.samples,
        }


def _sample_disc(rng: np.random.Generator, shape: Sequence[int], radius: float) -> np.ndarray:
    """Uniform samples in the complex disc of the given radius."""
    r = radius * np.sqrt(rng.random(shape))
    return r * np.exp(2j * math.pi * rng.random(shape))


def local_avoid(
    family: PeakFamily,
    p_index: int,
    eps: float,
    oracle: LocusOracle,
    region: Region,
    budget: int = DEFAULT_BUDGET,
    seed: Any = 0,
    n0: int = 2,
    batch: int = DEFAULT_BATCH,
    cutoff: float = DEFAULT_CUTOFF,
) -> AvoidanceResult:
    """Sample H with ||H|| <= eps until the oracle margin on K_p reaches the target.

    Margins are the minimum over the grid of region around point p_index of
    the oracle applied to the jets of family + sigma(H, p). The first sample
    reaching eps (-log eps)^(-N0) is accepted; when none does within the
    budget, the best sample seen is returned below target.

    Args:
        family: Current family; its own peak at p_index is replaced.
        p_index: Lattice index of the point to perturb.
        eps: Coefficient size bound, 0 < eps < 1/4.
        oracle: Locus oracle.
        region: Evaluation region K around p.
        budget: Maximum number of samples.
        seed: Anything numpy's default_rng accepts.
        n0: Exponent of the target margin.
        batch: Samples evaluated per vectorized batch.
        cutoff: Peak cutoff for the base family jets.

    Raises:
        InvalidArgumentError: If eps or budget are out of range.
    """
    errors = []
    if not 0 < eps < 0.25:
        errors.append(f"eps must satisfy 0 < eps < 1/4, got {eps}")
    if budget < 1:
        errors.append(f"budget must be >= 1, got {budget}")
    if errors:
        raise InvalidArgumentError("; ".join(errors))

    p = family.lattice.points[p_index]
    grid = region.around(p)
    base = family
    if np.any(family.coefficients[p_index]):
        base = family.subfamily([i for i in range(family.size) if i != p_index])
    base_jets = base.jets(grid, oracle.order, cutoff=cutoff).coefficients  # (G, m, out)

    # Jets of the unit monomial peaks at p on the grid, shape (G, size_in, size_out).
    size_in = transfer_table(family.n, family.degree, oracle.order).size_in
    P = np.repeat(p[None, :], grid.shape[0], axis=0)
    identity = np.broadcast_to(np.eye(size_in, dtype=complex), (grid.shape[0], size_in, size_in))
    unit = peak_jets(P, identity, grid, grid, family.degree, oracle.order)

    target = target_margin(eps, n0)
    rng = np.random.default_rng(seed)
    shape = (family.m, size_in)
    best_h = np.zeros(shape, dtype=complex)
    best_margin = -math.inf
    used = 0
    while used < budget:
        size = min(batch, budget - used)
        H = _sample_disc(rng, (size,) + shape, eps)
        jets = base_jets[None] + np.einsum("smi,gio->sgmo", H, unit)
        margins = oracle.margins(jets).min(axis=1)
        passing = np.flatnonzero(margins >= target)
        if passing.size:
            k = int(passing[0])
            used += k + 1
        else:
            k = int(np.argmax(margins))
            used += size
        if margins[k] > best_margin:
            best_margin = float(margins[k])
            best_h = H[k]
        if best_margin >= target:
            break

    below = best_margin < target
    if below:
        logger.warning(
            f"Local avoidance at point {p_index} below target: "
            f"{best_margin:.3e} < {target:.3e} after {used} samples"
        )
    else:
        logger.debug(f"Local avoidance at point {p_index}: {best_margin:.3e} in {used} samples")
    return AvoidanceResult(best_h, best_margin, target, below, used)


def zigzag(k: int) -> int:
    """Map an integer to a nonnegative one, injectively."""
    return 2 * k if k >= 0 else -2 * k - 1


def point_seed(seed: int, class_index: int, coords: Sequence[int]) -> np.random.SeedSequence:
    return np.random.SeedSequence([int(seed), class_index] + [zigzag(int(c)) for c in coords])


@dataclass
class PointRecord:
    index: int
    class_index: int
    point: np.ndarray
    achieved_margin: float
    target: float
    below_target: bool
    samples: int
    final_margin: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "index": self.index,
            "class": self.class_index,
            "point": encode_array(self.point),
            "achieved_margin": self.achieved_margin,
            "target": self.target,
            "below_target": self.below_target,
            "samples": self.samples,
            "final_margin": self.final_margin,
        }


@dataclass
class GlobalizationReport:
    """Summary of a sweep: schedule, per-point outcomes and the uniform margin."""

    epsilons: List[float]
    constants: ScheduleConstants
    D: float
    oracle: Dict[str, Any]
    points: List[PointRecord] = field(default_factory=list)
    uniform_margin: Optional[float] = None
    floor: Optional[float] = None
    window: Optional[float] = None
    window_margin: Optional[float] = None

    @property
    def below_target_count(self) -> int:
        return sum(1 for p in self.points if p.below_target)

    @property
    def floor_holds(self) -> Optional[bool]:
        if self.uniform_margin is None or self.floor is None:
            return None
        return self.uniform_margin >= self.floor

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilons": list(self.epsilons),
            "constants": self.constants.to_dict(),
            "D": self.D,
            "oracle": self.oracle,
            "points": [p.to_dict() for p in self.points],
            "uniform_margin": self.uniform_margin,
            "floor": self.floor,
            "window": self.window,
            "window_margin": self.window_margin,
            "floor_holds": self.floor_holds,
            "below_target_count": self.below_target_count,
        }


def final_margins(
    family: PeakFamily, oracle: LocusOracle, region: Region, cutoff: float = DEFAULT_CUTOFF
) -> np.ndarray:
    """Oracle margin of the family's jets, minimized over K_p, per lattice point."""
    out = np.zeros(family.size)
    for i, p in enumerate(family.lattice.points):
        jets = family.jets(region.around(p), oracle.order, cutoff=cutoff).coefficients
        out[i] = float(oracle.margins(jets).min())
    return out


def globalize(
    lattice: Lattice,
    classes: ColorClasses,
    oracle: LocusOracle,
    schedule: Sequence[float],
    constants: ScheduleConstants,
    degree: Optional[int] = None,
    region: Optional[Region] = None,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    workers: int = 1,
    cutoff: float = DEFAULT_CUTOFF,
    window: float = DEFAULT_WINDOW,
    measure: bool = True,
) -> Tuple[PeakFamily, GlobalizationReport]:
    """Run local avoidance class by class and measure the final margins.

    Args:
        lattice: Peak centers.
        classes: Color classes of the lattice.
        oracle: Locus oracle; its order is the default H degree.
        schedule: eps_i per class, validated against both inequalities.
        constants: Schedule constants C and N0.
        degree: Degree of the H polynomials (default oracle.order).
        region: Evaluation region K around each point.
        budget: Samples per local avoidance.
        seed: Base seed.
        workers: Parallel points within a class.
        cutoff: Peak cutoff for jet evaluation.
        window: Radius around the origin of the points whose final margins
            form the window margin. The same points, seeds and classes occur
            in every box that contains the window.
        measure: Compute final margins. Off for families that are only
            built, never reported.

    Raises:
        ScheduleError: If the schedule is too short or violates an inequality.
    """
    region = region or Region()
    degree = oracle.order if degree is None else degree
    if len(schedule) < classes.count:
        raise ScheduleError(f"schedule has {len(schedule)} entries for {classes.count} classes")
    schedule = list(schedule[: classes.count])
    validate_schedule(schedule, constants, classes.D)

    family = empty_family(lattice, classes, degree, oracle.m)
    family.epsilons = schedule
    report = GlobalizationReport(
        epsilons=schedule, constants=constants, D=classes.D, oracle=oracle.to_dict()
    )
    logger.info(
        f"Globalizing {lattice.size} points in {classes.count} classes "
        f"with oracle {oracle.name} ({workers} worker(s))"
    )

    for class_index in range(classes.count):
        members = classes.members(class_index)
        eps = schedule[class_index]
        snapshot = family
        jobs = [
            (
                index,
                partial(
                    local_avoid,
                    snapshot,
                    index,
                    eps,
                    oracle,
                    region,
                    budget,
                    point_seed(seed, class_index, lattice.integer_coords[index]),
                    constants.n0,
                    cutoff=cutoff,
                ),
            )
            for index in members
        ]
        results = run_jobs(jobs, max_workers=workers)
        coefficients = snapshot.coefficients.copy()
        for index, result in zip(members, results):
            coefficients[index] = result.H
            report.points.append(
                PointRecord(
                    index=index,
                    class_index=class_index,
                    point=lattice.points[index],
                    achieved_margin=result.achieved_margin,
                    target=result.target,
                    below_target=result.below_target,
                    samples=result.samples,
                )
            )
        family = family.with_coefficients(coefficients)
        logger.info(f"Class {class_index + 1}/{classes.count} done (eps={eps:.3e}, {len(members)} points)")

    report.points.sort(key=lambda r: r.index)
    if measure and lattice.size:
        margins = final_margins(family, oracle, region, cutoff)
        for record in report.points:
            record.final_margin = float(margins[record.index])
        report.uniform_margin = float(margins.min())
        report.floor = 0.5 * min(target_margin(e, constants.n0) for e in schedule)
        report.window = window
        central = np.linalg.norm(lattice.points, axis=1) <= window + 1e-12
        if np.any(central):
            report.window_margin = float(margins[central].min())
            logger.info(
                f"Window margin {report.window_margin:.4e} over {int(central.sum())} point(s)"
            )
        logger.info(
            f"Uniform margin {report.uniform_margin:.4e}, floor {report.floor:.4e}, "
            f"{report.below_target_count} point(s) below target"
        )
    return family, report


@dataclass
class RadiusRow:
    radius: float
    uniform_margin: Optional[float]
    floor: Optional[float]
    points: int
    below_target: int
    window_margin: Optional[float] = None

    def as_row(self) -> List[Any]:
        return [self.radius, self.uniform_margin, self.window_margin, self.floor, self.points,
                self.below_target]


RADIUS_CSV_HEADER = [
    "radius", "uniform_margin", "window_margin", "floor", "points", "below_target_count"
]


def margin_vs_radius(
    n: int,
    radii: Sequence[float],
    D: float,
    oracle: LocusOracle,
    constants: ScheduleConstants,
    eps1: float,
    scale: float,
    degree: Optional[int] = None,
    region: Optional[Region] = None,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    workers: int = 1,
    cutoff: float = DEFAULT_CUTOFF,
    window: float = DEFAULT_WINDOW,
) -> List[RadiusRow]:
    """Repeat the sweep over several box radii with the same seed.

    The uniform margin is a minimum over the whole box and falls as the box
    grows. The window margin covers a fixed set of central points and is the
    column to compare across radii.
    """
    rows = []
    for radius in radii:
        lattice = discretize(n, radius, scale)
        classes = color_classes(lattice, D)
        schedule = closed_form_schedule(classes.count, constants, eps1)
        _, report = globalize(lattice, classes, oracle, schedule, constants, degree, region,
                              budget, seed, workers, cutoff, window)
        rows.append(RadiusRow(float(radius), report.uniform_margin, report.floor,
                              lattice.size, report.below_target_count, report.window_margin))
    return rows
