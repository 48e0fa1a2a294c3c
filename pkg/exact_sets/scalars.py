"""
Scalars module for Sparse Forge.
Exact scalars: rationals, combinations over a gap basis, and tower magnitudes.
"""
import logging
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import TYPE_CHECKING, Callable, Iterable, List, Optional, Sequence, Tuple, Union

from errors import IncomparableError
from magnitudes.enclosures import Bounds, bits_schedule
from magnitudes.towers import Ordering, TowerMag, compare_rationals, mag_compare, ordering_from_sign

if TYPE_CHECKING:
    from magnitudes.sequences import GapBasis

logger = logging.getLogger(__name__)

Rational = Union[int, Fraction]

# Combinations whose terms stay under this many bits are materialized for exact power arithmetic.
CHEAP_BITS = 1 << 16


def _strip(coeffs: Iterable[Rational]) -> Tuple[Fraction, ...]:
    values = [Fraction(c) for c in coeffs]
    while values and not values[-1]:
        values.pop()
    return tuple(values)


@dataclass(frozen=True)
class GapCombo:
    """Σ c_j r_j over a gap basis; trailing zero coefficients are dropped.

    Equality is structural. Use scalar_compare for value comparison.
    """
    basis: 'GapBasis'
    coeffs: Tuple[Fraction, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, 'coeffs', _strip(self.coeffs))

    @classmethod
    def unit(cls, basis: 'GapBasis', j: int) -> 'GapCombo':
        return cls(basis, (0,) * j + (1,))

    @classmethod
    def constant(cls, basis: 'GapBasis', value: Rational) -> 'GapCombo':
        return cls(basis, (Fraction(value),))

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    @property
    def is_integral(self) -> bool:
        return all(c.denominator == 1 for c in self.coeffs)

    @property
    def coefficient_bound(self) -> Fraction:
        return max((abs(c) for c in self.coeffs), default=Fraction(0))

    def coefficient(self, j: int) -> Fraction:
        return self.coeffs[j] if j < len(self.coeffs) else Fraction(0)

    def _lift(self, other: Union['GapCombo', Rational]) -> 'GapCombo':
        if isinstance(other, GapCombo):
            if other.basis is not self.basis:
                raise ValueError(f"cannot mix gap bases {self.basis!r} and {other.basis!r}")
            return other
        if isinstance(other, (int, Fraction)):
            return GapCombo.constant(self.basis, other)
        return NotImplemented

    def __add__(self, other: Union['GapCombo', Rational]) -> 'GapCombo':
        lifted = self._lift(other)
        if lifted is NotImplemented:
            return NotImplemented
        size = max(len(self.coeffs), len(lifted.coeffs))
        return GapCombo(self.basis, tuple(self.coefficient(j) + lifted.coefficient(j) for j in range(size)))

    __radd__ = __add__

    def __neg__(self) -> 'GapCombo':
        return GapCombo(self.basis, tuple(-c for c in self.coeffs))

    def __sub__(self, other: Union['GapCombo', Rational]) -> 'GapCombo':
        lifted = self._lift(other)
        if lifted is NotImplemented:
            return NotImplemented
        return self + (-lifted)

    def __rsub__(self, other: Rational) -> 'GapCombo':
        return (-self) + other

    def __mul__(self, factor: Rational) -> 'GapCombo':
        if not isinstance(factor, (int, Fraction)):
            return NotImplemented
        return GapCombo(self.basis, tuple(c * factor for c in self.coeffs))

    __rmul__ = __mul__

    def __truediv__(self, divisor: Rational) -> 'GapCombo':
        if not isinstance(divisor, (int, Fraction)):
            return NotImplemented
        return GapCombo(self.basis, tuple(c / divisor for c in self.coeffs))

    def bounds(self, bits: int) -> Bounds:
        lo = hi = Fraction(0)
        for j, c in enumerate(self.coeffs):
            if not c:
                continue
            t_lo, t_hi = self.basis.term_bounds(j, bits)
            if c > 0:
                lo, hi = lo + c * t_lo, hi + c * t_hi
            else:
                lo, hi = lo + c * t_hi, hi + c * t_lo
        return lo, hi

    def __str__(self) -> str:
        parts = [f"{c}*r{j}" for j, c in enumerate(self.coeffs) if c]
        return " + ".join(parts) if parts else "0"


Scalar = Union[Fraction, GapCombo, TowerMag]


def _operand_bits(combo: GapCombo) -> Optional[int]:
    """Bits carried by the coefficients when every term has a rational value, else None."""
    for j, c in enumerate(combo.coeffs):
        if c and combo.basis.term_bits(j) is None:
            return None
    return max(c.numerator.bit_length() + c.denominator.bit_length() for c in combo.coeffs)


def _numeric_sign(combo: GapCombo) -> Ordering:
    exact = cheap_fraction(combo)
    if exact is not None:
        return compare_rationals(exact, 0)
    schedule = list(bits_schedule())
    operand_bits = _operand_bits(combo)
    # exact coefficients wider than the ceiling are resolved at their own size
    if operand_bits is not None and operand_bits + 64 > schedule[-1]:
        schedule.append(operand_bits + 64)
    for bits in schedule:
        lo, hi = combo.bounds(bits)
        if lo > 0:
            return Ordering.GT
        if hi < 0:
            return Ordering.LT
        if lo == hi == 0:
            return Ordering.EQ
    raise IncomparableError(f"sign of {combo} unresolved at the precision ceiling")


def combo_sign(combo: GapCombo) -> Ordering:
    """Sign of Σ c_j r_j.

    Folds the head exactly while consecutive ratios are integers. The
    head decides as soon as |head| (ρ - 1) exceeds the largest later
    coefficient, ρ bounding every later ratio from below; otherwise the
    combination is enclosed numerically.

    Raises:
        IncomparableError: The enclosure still straddles zero at the ceiling
    """
    coeffs = combo.coeffs
    if not coeffs:
        return Ordering.EQ
    basis = combo.basis
    head = Fraction(0)
    for j, c in enumerate(coeffs):
        if j > 0 and head:
            ratio = basis.exact_ratio(j)
            if ratio is None:
                return _numeric_sign(combo)
            head *= ratio
        head += c
        if not head:
            continue
        tail = coeffs[j + 1:]
        if not tail:
            break
        bound = max(abs(t) for t in tail)
        if abs(head) * (basis.ratio_lower_bound(j + 1) - 1) > bound:
            break
    return compare_rationals(head, 0)


def _as_tower(value: Scalar) -> Optional[TowerMag]:
    if isinstance(value, TowerMag):
        return value
    if isinstance(value, GapCombo):
        nonzero = [(j, c) for j, c in enumerate(value.coeffs) if c]
        if len(nonzero) == 1 and nonzero[0][1] > 0:
            j, c = nonzero[0]
            term = value.basis.term_tower(j)
            if c == 1:
                return term
            exact = value.basis.materialize_term(j)
            return TowerMag.from_rational(c * exact) if exact is not None else None
        exact = value.basis.materialize(value)
        return TowerMag.from_rational(exact) if exact is not None and exact > 0 else None
    value = Fraction(value)
    return TowerMag.from_rational(value) if value > 0 else None


def _bounds(value: Scalar, bits: int) -> Bounds:
    if isinstance(value, GapCombo):
        return value.bounds(bits)
    if isinstance(value, TowerMag):
        return value.bounds(bits)
    value = Fraction(value)
    return value, value


def _compare_with_tower(a: Scalar, b: Scalar) -> Ordering:
    if not isinstance(b, TowerMag) and scalar_sign(b) is not Ordering.GT:
        return Ordering.GT
    if not isinstance(a, TowerMag) and scalar_sign(a) is not Ordering.GT:
        return Ordering.LT
    ta, tb = _as_tower(a), _as_tower(b)
    if ta is not None and tb is not None:
        outcome = mag_compare(ta, tb)
        if outcome.decided:
            return outcome
    for bits in bits_schedule():
        a_lo, a_hi = _bounds(a, bits)
        b_lo, b_hi = _bounds(b, bits)
        if a_hi < b_lo:
            return Ordering.LT
        if a_lo > b_hi:
            return Ordering.GT
    raise IncomparableError(f"cannot order {a} and {b} at the precision ceiling")


def scalar_compare(a: Scalar, b: Scalar) -> Ordering:
    """Total order on scalars consistent with their real values.

    Args:
        a: First scalar
        b: Second scalar

    Returns:
        LT, EQ or GT

    Raises:
        IncomparableError: Certified refinement exceeded the precision ceiling
    """
    if a is b:
        return Ordering.EQ
    if isinstance(a, TowerMag) or isinstance(b, TowerMag):
        if a == b:
            return Ordering.EQ
        return _compare_with_tower(a, b)
    if isinstance(a, GapCombo):
        return combo_sign(a - b)
    if isinstance(b, GapCombo):
        return combo_sign(a - b)
    return compare_rationals(a, b)


def scalar_lt(a: Scalar, b: Scalar) -> bool:
    return scalar_compare(a, b) is Ordering.LT


def scalar_le(a: Scalar, b: Scalar) -> bool:
    return scalar_compare(a, b) is not Ordering.GT


def scalar_min(a: Scalar, b: Scalar) -> Scalar:
    return a if scalar_le(a, b) else b


def scalar_max(a: Scalar, b: Scalar) -> Scalar:
    return b if scalar_le(a, b) else a


def scalar_sign(a: Scalar) -> Ordering:
    if isinstance(a, TowerMag):
        return Ordering.GT
    if isinstance(a, GapCombo):
        return combo_sign(a)
    return compare_rationals(a, 0)


def scalar_abs(a: Scalar) -> Scalar:
    return -a if scalar_sign(a) is Ordering.LT else a


def to_fraction(a: Scalar) -> Optional[Fraction]:
    """Exact rational value when one exists in memory."""
    if isinstance(a, GapCombo):
        return a.basis.materialize(a)
    if isinstance(a, TowerMag):
        return a.value() if a.is_rational else None
    return Fraction(a)


def cheap_fraction(a: Scalar, max_bits: int = CHEAP_BITS) -> Optional[Fraction]:
    """Exact rational value when every term fits in max_bits, else None."""
    if isinstance(a, GapCombo):
        for j, c in enumerate(a.coeffs):
            if not c:
                continue
            bits = a.basis.term_bits(j)
            if bits is None or bits > max_bits:
                return None
        return a.basis.materialize(a)
    if isinstance(a, TowerMag):
        return a.value() if a.is_rational and a.top.numerator.bit_length() <= max_bits else None
    return Fraction(a)


def _cmp(a: Scalar, b: Scalar) -> int:
    outcome = scalar_compare(a, b)
    return -1 if outcome is Ordering.LT else (1 if outcome is Ordering.GT else 0)


def sort_key(values: Sequence[Scalar]) -> Callable[[Scalar], object]:
    """Key function ordering `values` by real value.

    Integral combinations over a basis whose ratios all exceed 2B + 1,
    B the largest coefficient, order lexicographically by coefficients;
    anything else goes through scalar_compare.
    """
    if values and all(isinstance(v, (int, Fraction)) for v in values):
        return Fraction
    combos = [v for v in values if isinstance(v, GapCombo)]
    if combos and len(combos) == len(values) and all(c.is_integral for c in combos):
        basis = combos[0].basis
        if all(c.basis is basis for c in combos):
            bound = max(c.coefficient_bound for c in combos)
            width = max(len(c.coeffs) for c in combos)
            if 2 * bound < basis.ratio_lower_bound(1) - 1:
                return lambda v: tuple(v.coefficient(j) for j in range(width))
    return cmp_to_key(_cmp)


def sorted_scalars(values: Iterable[Scalar]) -> List[Scalar]:
    items = list(values)
    return sorted(items, key=sort_key(items))


# Orders scalars by value inside bisect and sorted.
scalar_key = cmp_to_key(_cmp)
