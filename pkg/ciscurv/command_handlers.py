"""Subcommand handlers: turn parsed arguments into report payloads."""

import argparse
import logging
from dataclasses import dataclass
from functools import partial
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional

import numpy as np

from ciscurv.brody import DiskMap, brody_reparametrize, max_line_tangency, poincare_jacobian
from ciscurv.config import RunConfig
from ciscurv.errors import InvalidArgumentError, raise_collected
from ciscurv.formatter import ReportFormatter
from ciscurv.gauss import exterior_report
from ciscurv.germ import Germ, certify, curvature_values
from ciscurv.globalization import (
    RADIUS_CSV_HEADER,
    RadiusRow,
    ScheduleConstants,
    calibrate_constants,
    closed_form_schedule,
    final_margins,
    globalize,
    margin_vs_radius,
)
from ciscurv.hyperbolic import CSV_HEADER, build_scale_family, derivative_bound_experiment
from ciscurv.jetspace import JetSpec, LocusId, jet_space_dim, locus_codim, threshold_table
from ciscurv.lattice import color_classes, discretize
from ciscurv.oracles import TRANSVERSALITY, make_oracle
from ciscurv.peaks import PeakFamily, Region, transversality_margin
from ciscurv.polynomial import load_polynomial_map
from ciscurv.report_writer import ReportWriter, load_json
from ciscurv.worker_pool import run_jobs

logger = logging.getLogger(__name__)

CURVATURE_KINDS = ("ricci", "scalar", "holsec", "holbisec")
CERTIFY_KINDS = CURVATURE_KINDS + ("exterior",)


@dataclass
class CommandOutput:
    """Report payload, plus optional text that replaces the JSON on stdout."""

    result: Any
    text: Optional[str] = None


def parse_point(text: Optional[str], name: str = "point") -> Optional[List[complex]]:
    """Parse "re,im;re,im;..." into complex coordinates; "re" alone means im = 0.

    Raises:
        InvalidArgumentError: On a malformed coordinate.
    """
    if text is None:
        return None
    coords = []
    for k, part in enumerate(text.split(";")):
        fields = [f.strip() for f in part.split(",")]
        try:
            if len(fields) == 1:
                coords.append(complex(float(fields[0]), 0.0))
            elif len(fields) == 2:
                coords.append(complex(float(fields[0]), float(fields[1])))
            else:
                raise ValueError(part)
        except ValueError:
            raise InvalidArgumentError(
                f"{name} coordinate {k + 1} must be 're,im', got {part.strip()!r}"
            )
    return coords


def parse_list(text: Optional[str], kind: Callable[[str], Any], name: str) -> List[Any]:
    """Parse a comma-separated list such as "3,5,7"; empty text gives []."""
    if text is None or not text.strip():
        return []
    try:
        return [kind(item.strip()) for item in text.split(",")]
    except ValueError:
        raise InvalidArgumentError(f"{name} must be a comma-separated list, got {text!r}")


def _load_germ(args: argparse.Namespace, config: RunConfig) -> Germ:
    F = load_polynomial_map(args.map)
    point = parse_point(args.point)
    return Germ.create(F, point, zero_tol=config.zero_tol, rank_tol=config.rank_tol)


def _csv_path(args: argparse.Namespace, config: RunConfig) -> Optional[Path]:
    value = getattr(args, "csv", None)
    return Path(value) if value else config.csv_output


def handle_codim(args: argparse.Namespace, config: RunConfig) -> CommandOutput:
    """Handle codim command: one locus, or the threshold table for (d, n).

    Args:
        args: Parsed arguments with d, n, l, locus, table and format.
        config: Run configuration.
    """
    errors = []
    if not args.table and not args.locus:
        errors.append("either --table or --locus is required")
    if args.table and args.locus:
        errors.append("--table and --locus are mutually exclusive")
    raise_collected(errors, "Invalid codim arguments")

    if args.table:
        reports = threshold_table(args.d, args.n)
    else:
        locus = LocusId.parse(args.locus, args.l)
        spec = JetSpec(args.d, args.n, args.l if args.l is not None else 2)
        reports = [locus_codim(locus, spec)]

    logger.info(f"Computed {len(reports)} codimension report(s) for d={args.d}, n={args.n}")
    # one entry per locus, each with the dimension of the jet space it lives in
    result = [dict(r.to_dict(), jet_space_dim=jet_space_dim(r.spec)) for r in reports]
    text = ReportFormatter.format_codim_table(reports) + "\n" if args.format == "text" else None
    return CommandOutput(result, text)


def handle_curvature(args: argparse.Namespace, config: RunConfig) -> CommandOutput:
    """Handle curvature command: every curvature quantity of a germ.

    Args:
        args: Parsed arguments with map, point, vector and other.
        config: Run configuration.
    """
    germ = _load_germ(args, config)
    v = parse_point(args.vector, "vector")
    w = parse_point(args.other, "other")
    if v is not None:
        germ.check_unit(v, "vector")
    if w is not None:
        germ.check_unit(w, "other")
    values = curvature_values(germ, v, w)
    logger.info(f"Curvature of germ d={germ.d}, n={germ.n}: scalar {values['scalar']:.6g}")
    return CommandOutput({"germ": germ.to_dict(), "values": values})


def handle_certify(args: argparse.Namespace, config: RunConfig) -> CommandOutput:
    """Handle certify command: a negativity or positivity verdict.

    Args:
        args: Parsed arguments with map, point, kind, l and bundle.
        config: Run configuration.
    """
    germ = _load_germ(args, config)
    if args.kind == "exterior":
        if args.l is None:
            raise InvalidArgumentError("certify --kind exterior needs --l")
        result = exterior_report(
            germ, args.l, args.bundle, config.fd_step, config.restarts, config.seed, config.threads
        )
        logger.info(f"Exterior {args.bundle} l={args.l}: verdict {result['verdict']}")
        return CommandOutput({"germ": germ.to_dict(), "exterior": result})

    report = certify(germ, args.kind, config.restarts, config.seed, config.threads)
    logger.info(f"Certified {args.kind}: {report.negativity_certificate}")
    return CommandOutput({"germ": germ.to_dict(), "report": report.to_dict()})


def _replay(args: argparse.Namespace, config: RunConfig) -> CommandOutput:
    family = PeakFamily.from_dict(load_json(args.replay))
    oracle = make_oracle(args.oracle, family.n, family.m, args.l or max(family.degree, 1))
    region = Region(1.0, config.grid_step)
    margins = final_margins(family, oracle, region, config.peak_cutoff)
    result: Dict[str, Any] = {
        "replay": str(args.replay),
        "oracle": oracle.to_dict(),
        "points": family.size,
        "margins": margins,
        "uniform_margin": float(margins.min()) if margins.size else None,
    }
    logger.info(f"Replayed family from {args.replay}: {family.size} point(s)")
    return CommandOutput(result)


def handle_donaldson(args: argparse.Namespace, config: RunConfig) -> CommandOutput:
    """Handle donaldson command: globalize peak sections away from a locus.

    Args:
        args: Parsed arguments with n, m, l, radius, D, oracle, radii, csv,
            family_out, replay and calibrate.
        config: Run configuration (seed, budget, schedule constants, threads).
    """
    if args.replay:
        return _replay(args, config)

    errors = []
    for name in ("n", "m", "l", "radius", "D"):
        if getattr(args, name) is None:
            errors.append(f"--{name} is required")
    raise_collected(errors, "Invalid donaldson arguments")

    n, m, l = args.n, args.m, args.l
    oracle = make_oracle(args.oracle, n, m, l)
    if args.calibrate:
        constants = calibrate_constants(n, oracle.order, oracle.order, config.n0)
    else:
        constants = ScheduleConstants(config.schedule_c, config.n0)
    region = Region(1.0, config.grid_step)

    lattice = discretize(n, args.radius, config.lattice_scale)
    classes = color_classes(lattice, args.D)
    schedule = closed_form_schedule(classes.count, constants, config.eps1)
    family, report = globalize(
        lattice, classes, oracle, schedule, constants, None, region,
        config.budget, config.seed, config.threads, config.peak_cutoff, config.window,
    )
    result: Dict[str, Any] = {
        "lattice": {"n": n, "radius": args.radius, "points": lattice.size,
                    "separation": lattice.separation},
        "classes": classes.count,
        "globalization": report.to_dict(),
    }
    if args.oracle == TRANSVERSALITY:
        result["transversality_margin"] = transversality_margin(family, region).to_dict()

    radii = parse_list(args.radii, float, "--radii")
    if radii:
        rows = margin_vs_radius(
            n, radii, args.D, oracle, constants, config.eps1, config.lattice_scale, None,
            region, config.budget, config.seed, config.threads, config.peak_cutoff, config.window,
        )
    else:
        rows = [RadiusRow(float(args.radius), report.uniform_margin, report.floor,
                          lattice.size, report.below_target_count, report.window_margin)]
    result["radius_series"] = [dict(zip(RADIUS_CSV_HEADER, row.as_row())) for row in rows]

    csv_path = _csv_path(args, config)
    if csv_path:
        ReportWriter.write_csv(csv_path, RADIUS_CSV_HEADER, [row.as_row() for row in rows])
    if args.family_out:
        ReportWriter.write_json(Path(args.family_out), family.to_dict())
        logger.info(f"Saved peak family to {args.family_out}")
    return CommandOutput(result)


def handle_brody(args: argparse.Namespace, config: RunConfig) -> CommandOutput:
    """Handle brody command: reparametrize a disk map and certify the ratios.

    Args:
        args: Parsed arguments with map (DiskMap JSON, or a one-variable
            PolynomialMap) and deg_max.
        config: Run configuration.
    """
    f = DiskMap.from_dict(load_json(args.map))
    g, certificate = brody_reparametrize(f, config.brody_grid_step, config.grid_tol,
                                         degree=config.deg_max)
    logger.info(f"Brody certificate holds: {certificate.holds}")
    return CommandOutput({
        "poincare_jacobian_at_0": poincare_jacobian(f, 0),
        "certificate": certificate.to_dict(),
        "g": g.to_dict(),
    })


def handle_linescan(args: argparse.Namespace, config: RunConfig) -> CommandOutput:
    """Handle linescan command: highest contact order of lines through a point.

    Args:
        args: Parsed arguments with map, point and l.
        config: Run configuration.
    """
    s = load_polynomial_map(args.map)
    z = parse_point(args.point)
    scan = max_line_tangency(s, z, args.l, config.restarts, config.seed, config.zero_tol,
                             config.threads)
    if scan.order_max == 0:
        value = abs(complex(s.evaluate(np.asarray(z, dtype=complex))[0]))
        logger.warning(f"Point is off the hypersurface: |s(z)| = {value:.3e}")
    logger.info(f"Line scan: max order {scan.order_max}, contact >= {args.l}: {scan.contact_at_least_l}")
    return CommandOutput(scan.to_dict())


def handle_hyperbolic_experiment(args: argparse.Namespace, config: RunConfig) -> CommandOutput:
    """Handle hyperbolic-experiment command: disk derivatives across scales.

    Args:
        args: Parsed arguments with scales, n, degree, family, candidates and csv.
        config: Run configuration.
    """
    scales = parse_list(args.scales, int, "--scales")
    bad = [k for k in scales if k < 1]
    if bad:
        raise InvalidArgumentError(f"scales must be >= 1, got {bad}")

    jobs = [
        (
            k,
            partial(
                build_scale_family, k, args.n, args.degree, config.seed, config.lattice_scale,
                args.family, eps1=config.eps1,
                constants=ScheduleConstants(config.schedule_c, config.n0),
                budget=config.budget, region=Region(1.0, config.grid_step),
                cutoff=config.peak_cutoff,
            ),
        )
        for k in scales
    ]
    families = run_jobs(jobs, max_workers=config.threads)
    results = derivative_bound_experiment(
        list(zip(scales, families)), args.candidates, config.seed, config.zero_tol,
        config.rank_tol, config.peak_cutoff,
    )
    csv_path = _csv_path(args, config)
    if csv_path:
        ReportWriter.write_csv(csv_path, CSV_HEADER, [r.as_row() for r in results])
    logger.info(f"Hyperbolic experiment over {len(scales)} scale(s) done")
    return CommandOutput({
        "family": args.family,
        "n": args.n,
        "degree": args.degree,
        "scales": [r.to_dict() for r in results],
    })


HANDLERS: Dict[str, Callable[[argparse.Namespace, RunConfig], CommandOutput]] = {
    "codim": handle_codim,
    "curvature": handle_curvature,
    "certify": handle_certify,
    "donaldson": handle_donaldson,
    "brody": handle_brody,
    "linescan": handle_linescan,
    "hyperbolic-experiment": handle_hyperbolic_experiment,
}
