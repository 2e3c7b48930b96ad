"""Run configuration: tolerances, budgets, seeds and output paths."""

import argparse
import math
import os
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from ciscurv.errors import InputParseError, raise_collected
from ciscurv.report_writer import load_json

# Load environment variables from .env file
load_dotenv()

THREADS_ENV = "CISCURV_THREADS"
# Fields that depend on the machine, not the computation.
MACHINE_FIELDS = ("threads", "log_file", "output", "csv_output")
PATH_FIELDS = ("output", "csv_output", "log_file")


def _env_threads() -> int:
    value = os.getenv(THREADS_ENV)
    if value is None or not value.strip():
        return 1
    try:
        return int(value)
    except ValueError:
        return -1  # rejected by validate()


@dataclass
class RunConfig:
    """Settings shared by every subcommand and embedded in every report."""

    seed: int = 0
    zero_tol: float = 1e-9
    rank_tol: float = 1e-8
    grid_tol: float = 0.05
    tail_tol: float = math.exp(-math.pi / 4 * 64)
    restarts: int = 64
    budget: int = 512
    grid_step: float = 0.25
    fd_step: float = 1e-4
    peak_cutoff: float = 8.0
    lattice_scale: float = 0.75
    window: float = 0.5
    schedule_c: float = 0.5
    n0: int = 2
    eps1: float = 0.2
    brody_grid_step: float = 0.01
    deg_max: int = 64
    threads: Optional[int] = None
    output: Optional[Path] = None
    csv_output: Optional[Path] = None
    log_file: Optional[Path] = None

    def __post_init__(self):
        """Fill environment-derived defaults and normalize paths."""
        if self.threads is None:
            self.threads = _env_threads()
        for name in PATH_FIELDS:
            value = getattr(self, name)
            if value is not None and not isinstance(value, Path):
                setattr(self, name, Path(value))

    def validate(self) -> None:
        """Validate configuration parameters.

        Raises:
            InvalidArgumentError: Listing every invalid parameter.
        """
        errors = []
        for name in ("zero_tol", "rank_tol", "grid_tol", "tail_tol", "fd_step",
                     "grid_step", "peak_cutoff", "lattice_scale", "schedule_c", "window"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or not value > 0:
                errors.append(f"{name} must be positive, got {value!r}")
        for name in ("restarts", "budget", "deg_max", "threads"):
            value = getattr(self, name)
            if not isinstance(value, int) or value < 1:
                errors.append(f"{name} must be a positive integer, got {value!r}")
        if not isinstance(self.n0, int) or self.n0 < 0:
            errors.append(f"n0 must be a nonnegative integer, got {self.n0!r}")
        if not 0 < self.eps1 < 0.25:
            errors.append(f"eps1 must satisfy 0 < eps1 < 1/4, got {self.eps1!r}")
        if not 0 < self.brody_grid_step < 1:
            errors.append(f"brody_grid_step must lie in (0, 1), got {self.brody_grid_step!r}")
        if not isinstance(self.seed, int) or self.seed < 0 or self.seed >= 2**64:
            errors.append(f"seed must be a 64-bit nonnegative integer, got {self.seed!r}")
        raise_collected(errors, "Configuration validation failed")

    def apply_overrides(self, path: Path) -> None:
        """Apply a JSON object of field overrides from a --config file.

        Raises:
            FileNotFoundError: If the file does not exist.
            InputParseError: If the file is not a JSON object of known fields.
        """
        data = load_json(path)
        if not isinstance(data, dict):
            raise InputParseError(f"config file {path} must hold a JSON object", path=str(path))
        known = {f.name for f in fields(self)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise InputParseError(
                f"unknown config field(s) in {path}: {', '.join(unknown)}", path=str(path)
            )
        for name, value in data.items():
            if name in PATH_FIELDS and value is not None:
                value = Path(value)
            setattr(self, name, value)

    def to_dict(self) -> Dict[str, Any]:
        """Reproducibility record for reports (machine-dependent fields excluded)."""
        data = asdict(self)
        for name in MACHINE_FIELDS:
            data.pop(name, None)
        return data

    @classmethod
    def from_args(cls, args: argparse.Namespace) -> "RunConfig":
        """Create RunConfig from parsed command-line arguments.

        Precedence: defaults, environment, --config file, then explicit flags.

        Args:
            args: Parsed argparse.Namespace; flags left unset are None.

        Returns:
            RunConfig instance.
        """
        config = cls()
        if getattr(args, "config", None):
            config.apply_overrides(Path(args.config))
        for name in (
            "seed", "zero_tol", "rank_tol", "grid_tol", "restarts", "budget",
            "grid_step", "fd_step", "deg_max", "output", "csv_output", "log_file",
        ):
            value = getattr(args, name, None)
            if value is not None:
                setattr(config, name, value)
        config.__post_init__()
        return config


def _common_options() -> argparse.ArgumentParser:
    """Flags accepted before or after the subcommand name."""
    common = argparse.ArgumentParser(add_help=False)
    # SUPPRESS keeps a subparser from resetting a value given before the subcommand
    group = common.add_argument_group("run options")
    group.add_argument("--config", default=argparse.SUPPRESS,
                       help="JSON file of RunConfig field overrides")
    group.add_argument("--seed", type=int, default=argparse.SUPPRESS,
                       help="Base seed for every random choice (default: 0)")
    group.add_argument("--zero-tol", type=float, default=argparse.SUPPRESS,
                       help="Threshold for treating values as zero (default: 1e-9)")
    group.add_argument("--rank-tol", type=float, default=argparse.SUPPRESS,
                       help="Threshold on smallest singular values (default: 1e-8)")
    group.add_argument("--grid-tol", type=float, default=argparse.SUPPRESS,
                       help="Relative slack of grid certificates (default: 0.05)")
    group.add_argument("--restarts", type=int, default=argparse.SUPPRESS,
                       help="Multistart restarts of sphere searches (default: 64)")
    group.add_argument("--output", default=argparse.SUPPRESS,
                       help="Write the JSON report to this file instead of stdout")
    group.add_argument("--log-file", default=argparse.SUPPRESS,
                       help="Also log to this rotating file")
    group.add_argument("--verbose", action="store_true", default=argparse.SUPPRESS,
                       help="Log at DEBUG level")
    return common


def build_parser() -> argparse.ArgumentParser:
    """Parser for the ciscurv command line."""
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="ciscurv",
        description="Curvature, jet-codimension and peak-section computations "
        "for complete intersections",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    codim = sub.add_parser("codim", parents=[common], help="Codimension of bad-jet loci")
    codim.add_argument("--d", type=int, required=True, help="Submanifold dimension")
    codim.add_argument("--n", type=int, required=True, help="Ambient dimension")
    codim.add_argument("--l", type=int, help="Order of parametrized loci (jet order otherwise)")
    codim.add_argument("--locus", help="Locus name, e.g. HolSecDegenerate or ExteriorCotangent(2)")
    codim.add_argument("--table", action="store_true", help="Every theorem case for (d, n)")
    codim.add_argument("--format", choices=("json", "text"), default="json",
                       help="Output format on stdout (default: json)")

    curvature = sub.add_parser("curvature", parents=[common], help="Curvature of a germ")
    curvature.add_argument("--map", required=True, help="PolynomialMap JSON file")
    curvature.add_argument("--point", required=True, help='Base point "re,im;re,im;..."')
    curvature.add_argument("--vector", help="Unit tangent vector in frame coordinates")
    curvature.add_argument("--other", help="Second tangent vector for bisectional curvature")

    certify = sub.add_parser("certify", parents=[common], help="Negativity verdicts")
    certify.add_argument("--map", required=True, help="PolynomialMap JSON file")
    certify.add_argument("--point", required=True, help='Base point "re,im;re,im;..."')
    certify.add_argument("--kind", required=True,
                         choices=("ricci", "scalar", "holsec", "holbisec", "exterior"))
    certify.add_argument("--l", type=int, help="Exterior power (kind exterior)")
    certify.add_argument("--bundle", choices=("cotangent", "normal"), default="cotangent",
                         help="Bundle for kind exterior (default: cotangent)")

    donaldson = sub.add_parser("donaldson", parents=[common],
                               help="Globalize peak sections away from a locus")
    donaldson.add_argument("--n", type=int, help="Complex dimension")
    donaldson.add_argument("--m", type=int, help="Number of section components")
    donaldson.add_argument("--l", type=int, help="Jet order of the locus")
    donaldson.add_argument("--radius", type=float, help="Box radius")
    donaldson.add_argument("--D", type=float, help="Class separation distance")
    donaldson.add_argument("--oracle", choices=("zerojet", "transversality", "linetangency"),
                           default="transversality", help="Locus to avoid")
    donaldson.add_argument("--budget", type=int, help="Samples per local avoidance")
    donaldson.add_argument("--csv", help="Margin-vs-radius CSV output")
    donaldson.add_argument("--radii", help='Radii for the CSV sweep, e.g. "3,5,7"')
    donaldson.add_argument("--family-out", help="Save the peak family JSON for replay")
    donaldson.add_argument("--replay", help="Re-evaluate a saved peak family")
    donaldson.add_argument("--calibrate", action="store_true",
                           help="Measure the envelope constant C instead of the configured one")

    brody = sub.add_parser("brody", parents=[common], help="Brody reparametrization")
    brody.add_argument("--map", required=True,
                       help="DiskMap JSON, or PolynomialMap JSON in one variable")
    brody.add_argument("--deg-max", type=int, help="Truncation degree of the result")

    linescan = sub.add_parser("linescan", parents=[common], help="Contact order with lines")
    linescan.add_argument("--map", required=True, help="PolynomialMap JSON with m = 1")
    linescan.add_argument("--point", required=True, help='Point "re,im;re,im;..."')
    linescan.add_argument("--l", type=int, required=True, help="Contact order of interest")

    hyper = sub.add_parser("hyperbolic-experiment", parents=[common],
                           help="Disk derivative bounds across scales")
    hyper.add_argument("--scales", default="4,9,16", help='Scales k (default: "4,9,16")')
    hyper.add_argument("--n", type=int, default=2, help="Complex dimension (default: 2)")
    hyper.add_argument("--degree", type=int, default=2,
                       help="Degree of the peak polynomials (default: 2)")
    hyper.add_argument("--family", choices=("random", "linetangency", "linear"),
                       default="random", help="How sections are built (default: random)")
    hyper.add_argument("--candidates", type=int, default=4,
                       help="Zero-set points searched per scale (default: 4)")
    hyper.add_argument("--csv", help="CSV output of the per-scale series")

    return parser


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse command-line arguments.

    Args:
        argv: Arguments without the program name; None reads sys.argv.

    Returns:
        argparse.Namespace with parsed arguments.
    """
    return build_parser().parse_args(argv)
