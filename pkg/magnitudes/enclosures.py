"""
Enclosures module for Sparse Forge.
Certified exp/log bounds on exact rationals using fixed-point series with outward rounding.
"""
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Dict, Iterable, Iterator, Optional, Tuple, Union

from config import config, precision_bits
from errors import IncomparableError, InvalidIntervalError, MagnitudeOverflowError

logger = logging.getLogger(__name__)

Bounds = Tuple[Fraction, Fraction]
Rational = Union[int, Fraction]

# Number of doublings tried past the first guess before giving up.
MAX_WIDENINGS = 6


@dataclass(frozen=True)
class Enclosure:
    """Certified interval [lo, hi] around a real value."""
    lo: Fraction
    hi: Fraction
    precision: Fraction

    def __post_init__(self) -> None:
        if self.lo > self.hi:
            raise InvalidIntervalError(f"Enclosure lower bound exceeds upper bound: {self.lo} > {self.hi}")

    @property
    def width(self) -> Fraction:
        return self.hi - self.lo

    @property
    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, value: Rational) -> bool:
        return self.lo <= value <= self.hi

    def intersects(self, other: 'Enclosure') -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def narrow(self, other: 'Enclosure') -> 'Enclosure':
        """Intersection with another enclosure of the same value."""
        if not self.intersects(other):
            raise InvalidIntervalError(f"Disjoint enclosures [{self.lo}, {self.hi}] and [{other.lo}, {other.hi}]")
        return Enclosure(max(self.lo, other.lo), min(self.hi, other.hi), min(self.precision, other.precision))

    def to_dict(self) -> Dict[str, Any]:
        return {"lo": f"{self.lo.numerator}/{self.lo.denominator}", "hi": f"{self.hi.numerator}/{self.hi.denominator}"}


def bits_schedule(precision: Optional[Fraction] = None, start: int = 32) -> Tuple[int, ...]:
    """Working precisions tried by certified refinement, ending at the ceiling.

    Args:
        precision: Precision ceiling (default: configured ceiling)
        start: First working precision in bits

    Returns:
        Increasing tuple of bit counts
    """
    ceiling = precision_bits(precision if precision is not None else config.PRECISION_CEILING)
    schedule = []
    bits = min(start, ceiling)
    while bits < ceiling:
        schedule.append(bits)
        bits *= 2
    schedule.append(ceiling)
    return tuple(schedule)


def _ceil_div(a: int, b: int) -> int:
    return -((-a) // b)


def _floor_fixed(q: Fraction, w: int) -> int:
    return (q.numerator << w) // q.denominator


def _ceil_fixed(q: Fraction, w: int) -> int:
    return _ceil_div(q.numerator << w, q.denominator)


def _exp_series_fixed(x_lo: int, x_hi: int, w: int) -> Tuple[int, int]:
    """Bounds of e^x * 2^w for 0 <= x_lo/2^w <= x <= x_hi/2^w <= 1/2."""
    one = 1 << w
    lo_sum = hi_sum = lo_term = hi_term = one
    n = 1
    while True:
        lo_term = ((lo_term * x_lo) >> w) // n
        hi_term = _ceil_div(_ceil_div(hi_term * x_hi, one), n)
        lo_sum += lo_term
        hi_sum += hi_term
        if hi_term <= 1:
            # tail after term n is bounded by term n itself when x <= 1/2
            hi_sum += hi_term
            return lo_sum, hi_sum
        n += 1


def exp_bounds(q: Rational, bits: int, ceiling: Optional[int] = None) -> Bounds:
    """Certified bounds for e^q with relative width about 2^-bits.

    Halving reduction brings |q| under 1/2, the Taylor series runs in
    fixed point with directed rounding, and the result is squared back.

    Args:
        q: Exact exponent
        bits: Target relative precision in bits
        ceiling: Magnitude ceiling for |q| (default: configured)

    Returns:
        (lo, hi) with lo <= e^q <= hi
    """
    q = Fraction(q)
    ceiling = config.EXP_CEILING if ceiling is None else ceiling
    if abs(q) > ceiling:
        log2_size = q.numerator.bit_length() - q.denominator.bit_length()
        raise MagnitudeOverflowError(
            f"exp argument of about 2^{log2_size} exceeds magnitude ceiling {ceiling}",
            details={"ceiling": ceiling, "log2_argument": log2_size}
        )
    if q == 0:
        return Fraction(1), Fraction(1)

    a = abs(q)
    s = 0
    while a > Fraction(1 << s, 2):
        s += 1
    w = bits + s + 16
    x = a / (1 << s)
    lo, hi = _exp_series_fixed(_floor_fixed(x, w), _ceil_fixed(x, w), w)
    for _ in range(s):
        lo = (lo * lo) >> w
        hi = _ceil_div(hi * hi, 1 << w)

    if q > 0:
        return Fraction(lo, 1 << w), Fraction(hi, 1 << w)
    return Fraction(1 << w, hi), Fraction(1 << w, lo)


def _atanh_fixed(u: Fraction, w: int) -> Tuple[int, int]:
    """Bounds of atanh(u) * 2^w for |u| <= 1/3."""
    if u == 0:
        return 0, 0
    one = 1 << w
    a = abs(u)
    p_lo, p_hi = _floor_fixed(a, w), _ceil_fixed(a, w)
    sq_lo = (p_lo * p_lo) >> w
    sq_hi = _ceil_div(p_hi * p_hi, one)
    s_lo = s_hi = 0
    k = 0
    while True:
        s_lo += p_lo // (2 * k + 1)
        s_hi += _ceil_div(p_hi, 2 * k + 1)
        if p_hi <= 24:
            # remaining terms sum to at most p_k / 24
            s_hi += 1
            break
        p_lo = (p_lo * sq_lo) >> w
        p_hi = _ceil_div(p_hi * sq_hi, one)
        k += 1
    if u < 0:
        return -s_hi, -s_lo
    return s_lo, s_hi


@lru_cache(maxsize=64)
def _ln2_fixed(w: int) -> Tuple[int, int]:
    lo, hi = _atanh_fixed(Fraction(1, 3), w)
    return 2 * lo, 2 * hi


def ln2_bounds(bits: int) -> Bounds:
    """Certified bounds of ln 2."""
    w = bits + 8
    lo, hi = _ln2_fixed(w)
    return Fraction(lo, 1 << w), Fraction(hi, 1 << w)


def _trailing_zeros(n: int) -> int:
    return (n & -n).bit_length() - 1


def log_bounds(q: Rational, bits: int) -> Bounds:
    """Certified bounds for ln q, q > 0, with absolute width about 2^-bits.

    Powers of two are split off exactly; the remaining factor z in (1/2, 2)
    goes through ln z = 2 atanh((z-1)/(z+1)).

    Args:
        q: Positive exact argument
        bits: Target absolute precision in bits

    Returns:
        (lo, hi) with lo <= ln q <= hi
    """
    q = Fraction(q)
    if q <= 0:
        raise ValueError(f"log argument must be positive, got {q}")
    if q == 1:
        return Fraction(0), Fraction(0)

    num, den = q.numerator, q.denominator
    shift = _trailing_zeros(num) - _trailing_zeros(den)
    num >>= _trailing_zeros(num)
    den >>= _trailing_zeros(den)
    m = num.bit_length() - den.bit_length()
    shift += m
    if m >= 0:
        z = Fraction(num, den << m)
    else:
        z = Fraction(num << -m, den)

    w = bits + abs(shift).bit_length() + 16
    at_lo, at_hi = _atanh_fixed((z - 1) / (z + 1), w)
    l2_lo, l2_hi = _ln2_fixed(w)
    if shift >= 0:
        lo = 2 * at_lo + shift * l2_lo
        hi = 2 * at_hi + shift * l2_hi
    else:
        lo = 2 * at_lo + shift * l2_hi
        hi = 2 * at_hi + shift * l2_lo
    return Fraction(lo, 1 << w), Fraction(hi, 1 << w)


def exp_interval(lo: Rational, hi: Rational, bits: int, ceiling: Optional[int] = None) -> Bounds:
    """Monotone image of [lo, hi] under exp."""
    return exp_bounds(lo, bits, ceiling)[0], exp_bounds(hi, bits, ceiling)[1]


def log_interval(lo: Rational, hi: Rational, bits: int) -> Bounds:
    """Monotone image of [lo, hi] under ln; requires lo > 0."""
    return log_bounds(lo, bits)[0], log_bounds(hi, bits)[1]


def exp_enclosure(q: Rational, p: Rational, ceiling: Optional[int] = None) -> Enclosure:
    """Enclosure of e^q with absolute width at most p.

    Args:
        q: Exact exponent
        p: Required width, p > 0
        ceiling: Magnitude ceiling for |q| (default: configured)

    Returns:
        Enclosure containing e^q

    Raises:
        MagnitudeOverflowError: |q| exceeds the ceiling
    """
    q, p = Fraction(q), Fraction(p)
    if p <= 0:
        raise ValueError(f"precision must be positive, got {p}")
    # absolute width needs extra bits for the integer part of e^q
    bits = precision_bits(min(p, Fraction(1, 2))) + max(0, math.ceil(q * Fraction(14427, 10000))) + 8
    for _ in range(MAX_WIDENINGS):
        lo, hi = exp_bounds(q, bits, ceiling)
        if hi - lo <= p:
            return Enclosure(lo, hi, p)
        bits *= 2
    raise IncomparableError(f"exp({q}) did not reach width {p}")


def log_enclosure(q: Rational, p: Rational) -> Enclosure:
    """Enclosure of ln q with absolute width at most p."""
    q, p = Fraction(q), Fraction(p)
    if p <= 0:
        raise ValueError(f"precision must be positive, got {p}")
    bits = precision_bits(min(p, Fraction(1, 2))) + 4
    for _ in range(MAX_WIDENINGS):
        lo, hi = log_bounds(q, bits)
        if hi - lo <= p:
            return Enclosure(lo, hi, p)
        bits *= 2
    raise IncomparableError(f"ln({q}) did not reach width {p}")


def refine(evaluate: Callable[[Fraction], Enclosure], precisions: Iterable[Rational]) -> Iterator[Enclosure]:
    """Enclosures of one value at each precision, each narrowed by those before it.

    Successive results are nested and never widen.

    Args:
        evaluate: Maps a width p to an enclosure of width at most p
        precisions: Widths to evaluate at, usually decreasing

    Yields:
        The running intersection after each evaluation
    """
    current: Optional[Enclosure] = None
    for p in precisions:
        fresh = evaluate(Fraction(p))
        current = fresh if current is None else current.narrow(fresh)
        yield current
