"""
Psi module for Sparse Forge.
The homeomorphism ψ(t) = e^{-1/t} (t < 1), t - 1 + e^{-1} (t >= 1) and its iterates.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

from config import precision_bits
from errors import IncomparableError, MagnitudeOverflowError, MagnitudeUnderflowError
from magnitudes.enclosures import Bounds, Enclosure, MAX_WIDENINGS, exp_bounds
from magnitudes.towers import Ordering, TowerMag, compare_rationals, mag_compare

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]


@dataclass(frozen=True)
class PsiSpec:
    """Iterate index l of ψ; negative values select inverse iterates."""
    l: int

    def __str__(self) -> str:
        return f"psi_{self.l}"


def _psi_lower(t: Fraction, bits: int) -> Fraction:
    if t <= 0:
        return Fraction(0)
    if t >= 1:
        return t - 1 + exp_bounds(-1, bits)[0]
    try:
        return exp_bounds(-1 / t, bits)[0]
    except MagnitudeOverflowError:
        return Fraction(0)


def _psi_upper(t: Fraction, bits: int) -> Fraction:
    if t >= 1:
        return t - 1 + exp_bounds(-1, bits)[1]
    try:
        return exp_bounds(-1 / t, bits)[1]
    except MagnitudeOverflowError as e:
        raise MagnitudeUnderflowError(
            f"psi({t}) is below numeric range; compare as TowerMag instead",
            details={"t": str(t)}
        ) from e


def psi_interval(lo: Fraction, hi: Fraction, bits: int) -> Bounds:
    """Monotone image of [lo, hi] under ψ."""
    return _psi_lower(lo, bits), _psi_upper(hi, bits)


def psi_iterate_bounds(t: Fraction, l: int, bits: int) -> Bounds:
    """Bounds of ψ_l(t), l >= 0, at working precision `bits`."""
    lo = hi = Fraction(t)
    for _ in range(l):
        lo, hi = psi_interval(lo, hi, bits)
    return lo, hi


def psi_tower(t: Union[Rational, TowerMag], l: int) -> TowerMag:
    """ψ_l of a value in (0, 1] as an exact TowerMag, l >= 0."""
    mag = t if isinstance(t, TowerMag) else TowerMag.from_rational(t)
    return mag.psi(l)


def _iterate_vs(m: Fraction, l: int, target: Fraction, bits: int) -> Ordering:
    """Certified ordering of ψ_l(m) against target for l >= 1."""
    if m <= 1:
        return mag_compare(TowerMag(l, 1 / m), TowerMag.from_rational(target), Fraction(1, 1 << bits))
    lo, hi = psi_iterate_bounds(m, l, bits)
    if lo > target:
        return Ordering.GT
    if hi < target:
        return Ordering.LT
    return compare_rationals(lo, target) if lo == hi else Ordering.UNKNOWN


def _inverse_enclosure(t: Fraction, l: int, p: Fraction, bits: int) -> Optional[Enclosure]:
    """Bisection for ψ_{-l}(t): the root of ψ_l(m) = t on [t, t + l + 1]."""
    lo, hi = t, t + l + 1
    while hi - lo > p:
        mid = (lo + hi) / 2
        order = _iterate_vs(mid, l, t, bits)
        if order is Ordering.EQ:
            return Enclosure(mid, mid, p)
        if order is Ordering.LT:
            lo = mid
        elif order is Ordering.GT:
            hi = mid
        else:
            return None
    return Enclosure(lo, hi, p)


def psi_iter_eval(spec: PsiSpec, t: Rational, p: Rational) -> Enclosure:
    """Certified enclosure of ψ_l(t).

    Args:
        spec: Iterate index
        t: Positive rational argument
        p: Required enclosure width

    Returns:
        Enclosure of width at most p

    Raises:
        MagnitudeUnderflowError: ψ_l(t) is too small for a numeric enclosure
        IncomparableError: The precision schedule was exhausted
    """
    t, p = Fraction(t), Fraction(p)
    if t <= 0:
        raise ValueError(f"psi is defined on (0, inf), got {t}")
    if p <= 0:
        raise ValueError(f"precision must be positive, got {p}")
    if spec.l == 0:
        return Enclosure(t, t, p)

    bits = precision_bits(min(p, Fraction(1, 2))) + abs(spec.l).bit_length() + 8
    for _ in range(MAX_WIDENINGS):
        if spec.l > 0:
            lo, hi = psi_iterate_bounds(t, spec.l, bits)
            if hi - lo <= p:
                return Enclosure(lo, hi, p)
        else:
            enclosure = _inverse_enclosure(t, -spec.l, p, bits)
            if enclosure is not None:
                return enclosure
        logger.debug(f"psi_{spec.l}({t}) widening to {bits * 2} bits")
        bits *= 2
    raise IncomparableError(f"psi_{spec.l}({t}) did not reach width {p}")
