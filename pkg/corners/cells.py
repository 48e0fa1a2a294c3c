"""
Cells module for Sparse Forge.
Corner cells 0 < x_n < f(x_{n-1}), ..., x_2 < f(x_1) for f = x/2, x^l and ψ_l.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from fractions import Fraction
from typing import Optional, Sequence, Tuple, Union

from config import config
from errors import ConfigError, SparseForgeError
from exact_sets.intervals import Interval
from exact_sets.scalars import GapCombo, Scalar, cheap_fraction, scalar_compare, scalar_sign
from magnitudes.enclosures import bits_schedule
from magnitudes.psi import PsiSpec, psi_iter_eval
from magnitudes.towers import (
    Ordering, TowerMag, mag_compare, tower_power_bounds, tower_scaled_lower, tower_scaled_upper
)

logger = logging.getLogger(__name__)

Bound = Tuple[Scalar, Scalar]


class CornerKind(Enum):
    SBB = "sbb"
    POLY = "poly"
    PSI = "psi"


class Membership(Enum):
    IN = "in"
    OUT = "out"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class CornerSpec:
    """A corner cell in R^n; l is the power or ψ iterate of the chain map."""
    kind: CornerKind
    n: int
    l: int = 1

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f"corner dimension must be at least 1, got {self.n}")
        if self.kind is not CornerKind.SBB and self.l < 1:
            raise ConfigError(f"{self.kind.value} corners need l >= 1, got {self.l}")

    @classmethod
    def parse(cls, token: str, n: int) -> 'CornerSpec':
        """Read `sbb`, `poly:2` or `psi:1` for dimension n."""
        kind, _, arg = token.strip().lower().partition(":")
        try:
            corner = CornerKind(kind)
            return cls(corner, n, int(arg) if arg else (1 if corner is CornerKind.SBB else 2))
        except ValueError as e:
            raise ConfigError(f"Unknown corner {token!r}; expected sbb, poly:<l> or psi:<l>") from e

    @property
    def exact(self) -> bool:
        return self.kind is not CornerKind.PSI

    def __str__(self) -> str:
        if self.kind is CornerKind.SBB:
            return f"sbb({self.n})"
        return f"{self.kind.value}({self.n},{self.l})"


def positive_tower_bounds(x: Scalar) -> Optional[Tuple[TowerMag, TowerMag]]:
    """Lower and upper TowerMag bounds of a positive scalar, or None.

    A combination λ r_j + tail with leading coefficient λ and coefficients
    at most B in size lies within (λ ± B/(ρ-1)) r_j, ρ bounding every later ratio.
    """
    if isinstance(x, TowerMag):
        return x, x
    if not isinstance(x, GapCombo):
        x = Fraction(x)
        if x <= 0:
            return None
        exact = TowerMag.from_rational(x)
        return exact, exact
    cheap = cheap_fraction(x)
    if cheap is not None:
        return positive_tower_bounds(cheap)

    basis = x.basis
    lead = next(j for j, c in enumerate(x.coeffs) if c)
    tail = x.coeffs[lead + 1:]
    slack = max((abs(c) for c in tail), default=Fraction(0)) / (basis.ratio_lower_bound(lead + 1) - 1)
    head = x.coeffs[lead]
    if head - slack > 0:
        term = basis.term_tower(lead)
        lower = tower_scaled_lower(head - slack, term)
        upper = tower_scaled_upper(head + slack, term)
        if lower is not None and upper is not None:
            return lower, upper

    for bits in bits_schedule():
        lo, hi = x.bounds(bits)
        if lo > 0:
            return TowerMag.from_rational(lo), TowerMag.from_rational(hi)
    return None


def _psi_bounds(x: Fraction, l: int, p: Fraction) -> Bound:
    if x <= 1:
        exact = TowerMag.from_rational(x).psi(l)
        return exact, exact
    enclosure = psi_iter_eval(PsiSpec(l), x, p)
    return enclosure.lo, enclosure.hi


def chain_bounds(spec: CornerSpec, x: Scalar, p: Optional[Fraction] = None) -> Optional[Bound]:
    """Certified lower and upper bounds of f(x) for the chain map of a corner, x > 0.

    Returns the exact value twice whenever it is representable.
    """
    p = config.PRECISION_CEILING if p is None else p
    if spec.kind is CornerKind.SBB:
        if isinstance(x, TowerMag):
            lower = tower_scaled_lower(Fraction(1, 2), x)
            upper = tower_scaled_upper(Fraction(1, 2), x) or x
            return (lower, upper) if lower is not None else None
        return x / 2, x / 2

    cheap = cheap_fraction(x)
    if cheap is not None:
        if spec.kind is CornerKind.POLY:
            return cheap ** spec.l, cheap ** spec.l
        return _psi_bounds(cheap, spec.l, p)

    bounds = positive_tower_bounds(x)
    if bounds is None:
        return None
    lo, hi = bounds
    if spec.kind is CornerKind.POLY:
        return tower_power_bounds(lo, spec.l)[0], tower_power_bounds(hi, spec.l)[1]
    if not hi.at_most_one():
        return None
    return lo.psi(spec.l), hi.psi(spec.l)


def _order(a: Scalar, b: Scalar, p: Optional[Fraction]) -> Ordering:
    """Certified ordering; tower pairs honour the precision, failures become UNKNOWN."""
    if isinstance(b, TowerMag) and isinstance(a, GapCombo) and cheap_fraction(a) is None:
        bounds = positive_tower_bounds(a)
        if bounds is not None:
            if _order(bounds[1], b, p) is Ordering.LT:
                return Ordering.LT
            if _order(bounds[0], b, p) in (Ordering.GT, Ordering.EQ):
                return Ordering.GT
            return Ordering.UNKNOWN
    if isinstance(a, TowerMag) and isinstance(b, TowerMag):
        return mag_compare(a, b, p)
    try:
        return scalar_compare(a, b)
    except SparseForgeError:
        return Ordering.UNKNOWN


def _below(y: Scalar, x: Scalar, spec: CornerSpec, p: Optional[Fraction]) -> Ordering:
    """LT when y < f(x) is certified, GT when y >= f(x) is, else UNKNOWN."""
    try:
        bounds = chain_bounds(spec, x, p)
    except SparseForgeError:
        return Ordering.UNKNOWN
    if bounds is None:
        return Ordering.UNKNOWN
    f_lo, f_hi = bounds
    if _order(y, f_lo, p) is Ordering.LT:
        return Ordering.LT
    if _order(y, f_hi, p) in (Ordering.GT, Ordering.EQ):
        return Ordering.GT
    return Ordering.UNKNOWN


def _positive(x: Scalar) -> Ordering:
    try:
        return scalar_sign(x)
    except SparseForgeError:
        return Ordering.UNKNOWN


BoxLike = Sequence[Union[Interval, Tuple[Scalar, Scalar]]]


def corner_box_membership(box: BoxLike, spec: CornerSpec, p: Optional[Fraction] = None) -> Membership:
    """Tri-state membership of a whole coordinate box in the corner cell.

    OUT when some coordinate is non-positive throughout or some link fails at
    the favourable corner of the box; IN when every link holds at the
    unfavourable corner; UNKNOWN otherwise.

    Args:
        box: n coordinate ranges [lo_i, hi_i], x_1 first
        spec: Corner cell
        p: Precision ceiling for ψ comparisons

    Returns:
        Membership
    """
    if len(box) != spec.n:
        raise ValueError(f"{spec} needs {spec.n} coordinates, got {len(box)}")
    ranges = [(b.lo, b.hi) if isinstance(b, Interval) else b for b in box]

    if any(_positive(hi) in (Ordering.LT, Ordering.EQ) for _, hi in ranges):
        return Membership.OUT
    for (_, hi_prev), (lo_next, _) in zip(ranges, ranges[1:]):
        if _positive(hi_prev) is Ordering.GT and _below(lo_next, hi_prev, spec, p) is Ordering.GT:
            return Membership.OUT

    if any(_positive(lo) is not Ordering.GT for lo, _ in ranges):
        return Membership.UNKNOWN
    for (lo_prev, _), (_, hi_next) in zip(ranges, ranges[1:]):
        if _below(hi_next, lo_prev, spec, p) is not Ordering.LT:
            return Membership.UNKNOWN
    return Membership.IN


def corner_membership(v: Sequence[Scalar], spec: CornerSpec, p: Optional[Fraction] = None) -> Membership:
    """Membership of a point: the box case with every range degenerate.

    SBB and POLY with rational or cheaply materialized coordinates are exact;
    PSI is certified and UNKNOWN only when enclosures overlap at precision p.

    Examples:
        corner_membership((4, 1), CornerSpec(CornerKind.SBB, 2)) is Membership.IN
    """
    values = [Fraction(x) if isinstance(x, int) else x for x in v]
    verdict = corner_box_membership([(x, x) for x in values], spec, p)
    logger.debug(f"{spec} membership of {[str(x) for x in values]}: {verdict.value}")
    return verdict
