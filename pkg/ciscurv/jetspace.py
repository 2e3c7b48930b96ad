"""Exact dimension and codimension counts for jet spaces of complex submanifolds.

Everything here is integer arithmetic. Codimensions are lower bounds for the
loci of bad jets; a locus is avoidable by a generic section when its
codimension exceeds the submanifold dimension d.
"""

import itertools
import logging
from dataclasses import dataclass, field
from math import comb
from typing import Any, Dict, List, Optional

from ciscurv.errors import InvalidArgumentError, raise_collected

logger = logging.getLogger(__name__)

INFLECTION = "Inflection"
RICCI_DEGENERATE = "RicciDegenerate"
SCALAR_FLAT = "ScalarFlat"
HOLSEC_DEGENERATE = "HolSecDegenerate"
HOLBISEC_DEGENERATE = "HolBisecDegenerate"
EXTERIOR_COTANGENT = "ExteriorCotangent"
EXTERIOR_NORMAL = "ExteriorNormal"
LINE_TANGENCY = "LineTangency"
TRANSVERSALITY = "Transversality"

PARAMETRIZED_TAGS = (EXTERIOR_COTANGENT, EXTERIOR_NORMAL, LINE_TANGENCY)
LOCUS_TAGS = (
    INFLECTION,
    RICCI_DEGENERATE,
    SCALAR_FLAT,
    HOLSEC_DEGENERATE,
    HOLBISEC_DEGENERATE,
    EXTERIOR_COTANGENT,
    EXTERIOR_NORMAL,
    LINE_TANGENCY,
    TRANSVERSALITY,
)

NORMAL_SIGN_NOTE = (
    "the dual inequality is printed both as l(n-l) <= 2d(l-1) and as "
    "l(n-l) <= 2d(1-l); the first form is used"
)


@dataclass(frozen=True)
class JetSpec:
    """Index (d, n, l) of the space of l-jets of d-dimensional submanifolds of C^n."""

    d: int
    n: int
    l: int = 1

    def __post_init__(self):
        errors = []
        if self.d < 1:
            errors.append(f"d must be >= 1, got {self.d}")
        if self.n <= self.d:
            errors.append(f"n must exceed d, got n={self.n}, d={self.d}")
        if self.l < 0:
            errors.append(f"l must be >= 0, got {self.l}")
        raise_collected(errors, "Invalid jet spec")

    @property
    def codim(self) -> int:
        """Number of defining equations n - d."""
        return self.n - self.d

    def to_dict(self) -> Dict[str, Any]:
        return {"d": self.d, "n": self.n, "l": self.l}


@dataclass(frozen=True)
class LocusId:
    """A bad-jet locus, with its order parameter for the parametrized tags."""

    tag: str
    l: Optional[int] = None

    def __post_init__(self):
        if self.tag not in LOCUS_TAGS:
            raise InvalidArgumentError(f"unknown locus: {self.tag}")
        if self.tag in PARAMETRIZED_TAGS:
            if self.l is None or self.l < 1:
                raise InvalidArgumentError(f"{self.tag} needs an order l >= 1, got {self.l}")
        elif self.l is not None:
            raise InvalidArgumentError(f"{self.tag} takes no order parameter")

    @property
    def name(self) -> str:
        return f"{self.tag}({self.l})" if self.l is not None else self.tag

    @classmethod
    def parse(cls, text: str, l: Optional[int] = None) -> "LocusId":
        """Parse "Tag", "Tag(3)" or a tag plus separate order, case-insensitively."""
        raw = text.strip()
        if raw.endswith(")") and "(" in raw:
            head, _, arg = raw[:-1].partition("(")
            raw, l = head.strip(), int(arg)
        lookup = {tag.lower(): tag for tag in LOCUS_TAGS}
        tag = lookup.get(raw.lower())
        if tag is None:
            raise InvalidArgumentError(
                f"unknown locus '{text}', expected one of: {', '.join(LOCUS_TAGS)}"
            )
        return cls(tag, l if tag in PARAMETRIZED_TAGS else None)


@dataclass
class CodimReport:
    """Lower bound for the codimension of a locus and its theorem threshold."""

    locus: LocusId
    spec: JetSpec
    codim_lower_bound: int
    hypothesis_name: str
    hypothesis_holds: bool
    notes: List[str] = field(default_factory=list)

    @property
    def threshold_holds(self) -> bool:
        return self.codim_lower_bound > self.spec.d

    def to_dict(self) -> Dict[str, Any]:
        return {
            "locus": self.locus.name,
            "spec": self.spec.to_dict(),
            "codim_lower_bound": self.codim_lower_bound,
            "threshold_holds": self.threshold_holds,
            "hypothesis_name": self.hypothesis_name,
            "hypothesis_holds": self.hypothesis_holds,
            "notes": list(self.notes),
        }


def jet_space_dim(spec: JetSpec) -> int:
    """Dimension of Jet^l_{d,n}.

    Parametrization jets C^d -> C^n have n * C(d+l, d) coefficients; the
    reparametrization group of l-jets fixing the origin has dimension
    d * (C(d+l, d) - 1).
    """
    monomials = comb(spec.d + spec.l, spec.d)
    return spec.n * monomials - spec.d * (monomials - 1)


def brute_force_jet_dim(spec: JetSpec) -> int:
    """Same count as jet_space_dim by enumerating exponents explicitly."""
    monomials = sum(
        1 for alpha in itertools.product(range(spec.l + 1), repeat=spec.d) if sum(alpha) <= spec.l
    )
    return spec.n * monomials - spec.d * (monomials - 1)


def elimination_bound(codim_A: int, dim_fiber: int) -> int:
    """Codimension bound for the projection of a locus along a fiber."""
    if codim_A < 0 or dim_fiber < 0:
        raise InvalidArgumentError(
            f"codimension and fiber dimension must be >= 0, got {codim_A}, {dim_fiber}"
        )
    return max(0, codim_A - dim_fiber)


def locus_codim(locus: LocusId, spec: JetSpec) -> CodimReport:
    """Closed-form codimension lower bound for a locus.

    Raises:
        InvalidArgumentError: If the locus does not make sense for spec.
    """
    d, n = spec.d, spec.n
    notes: List[str] = []
    tag = locus.tag

    if tag == INFLECTION:
        if d != 1:
            raise InvalidArgumentError(f"Inflection is a curve locus, got d={d}")
        codim, hyp_name, hyp = n - 1, "curves: n >= 3", n >= 3
    elif tag == RICCI_DEGENERATE:
        # jets with a degenerate direction, projected along the choice of direction
        codim = elimination_bound((d + 1) * (n - d), n - 1)
        hyp_name, hyp = "ricci: d <= n - 2", d <= n - 2
    elif tag == SCALAR_FLAT:
        codim = d * (d + 1) * (n - d) // 2
        hyp_name, hyp = "scalar: d <= n - 1 and n >= 3", d <= n - 1 and n >= 3
    elif tag == HOLSEC_DEGENERATE:
        codim, hyp_name, hyp = n - 2 * d + 1, "holsec: n >= 3d", n >= 3 * d
    elif tag == HOLBISEC_DEGENERATE:
        codim, hyp_name, hyp = n - 3 * d + 2, "holbisec: n >= 4d - 1", n >= 4 * d - 1
    elif tag == EXTERIOR_COTANGENT:
        l = locus.l
        if l > d:
            raise InvalidArgumentError(f"ExteriorCotangent needs 1 <= l <= d, got l={l}, d={d}")
        codim = 1 - d + l * (n + l) - 2 * d * l
        hyp_name = "exterior cotangent: 2d(1+l) <= l(n+l)"
        hyp = 2 * d * (1 + l) <= l * (n + l)
    elif tag == EXTERIOR_NORMAL:
        l = locus.l
        if l > n - d:
            raise InvalidArgumentError(
                f"ExteriorNormal needs 1 <= l <= n - d, got l={l}, n - d={n - d}"
            )
        codim = d + 1 + 2 * d * (l - 1) - l * (n - l)
        hyp_name = "exterior normal: l(n-l) <= 2d(l-1)"
        hyp = l * (n - l) <= 2 * d * (l - 1)
        notes.append(NORMAL_SIGN_NOTE)
    elif tag == LINE_TANGENCY:
        if d != n - 1:
            raise InvalidArgumentError(f"LineTangency is a hypersurface locus, got d={d}, n={n}")
        l = locus.l
        codim = l + 1 - n
        hyp_name, hyp = "hyperbolic: l >= 2n - 1", l >= 2 * n - 1
    else:
        codim = d + 1
        hyp_name, hyp = "transversality: always", True
        notes.append("codimension n - m + 1 with m = n - d equations")

    report = CodimReport(locus, spec, codim, hyp_name, hyp, notes)
    if report.hypothesis_holds and not report.threshold_holds:
        logger.warning(f"{locus.name} at {spec}: hypothesis holds but codim {codim} <= d")
    return report


def threshold_table(d: int, n: int) -> List[CodimReport]:
    """One report per theorem case applicable to (d, n)."""
    JetSpec(d, n)  # validates 1 <= d < n
    loci: List[LocusId] = []
    if d == 1:
        loci.append(LocusId(INFLECTION))
    loci.extend(
        LocusId(tag)
        for tag in (RICCI_DEGENERATE, SCALAR_FLAT, HOLSEC_DEGENERATE, HOLBISEC_DEGENERATE)
    )
    loci.extend(LocusId(EXTERIOR_COTANGENT, l) for l in range(1, d + 1))
    loci.extend(LocusId(EXTERIOR_NORMAL, l) for l in range(2, n - d + 1))
    if d == n - 1:
        loci.append(LocusId(LINE_TANGENCY, 2 * n - 1))
    loci.append(LocusId(TRANSVERSALITY))

    reports = []
    for locus in loci:
        # jet order needed to see the locus
        if locus.tag == TRANSVERSALITY:
            order = 1
        elif locus.tag == LINE_TANGENCY:
            order = locus.l
        else:
            order = 2
        reports.append(locus_codim(locus, JetSpec(d, n, order)))
    logger.debug(f"Threshold table for d={d}, n={n}: {len(reports)} cases")
    return reports
